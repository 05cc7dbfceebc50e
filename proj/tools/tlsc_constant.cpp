// Minimal external segmenter: tlsc_constant [--class K] [--classes C] [--stride S] [--exit N] IN OUT
// Reads a TLFR frame and writes a one-hot TLSC map of class K.
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <string>
#include <vector>

#include "taplab/segmenter.hpp"

int main(int argc, char** argv) {
  int cls = 0, classes = 2, stride = 4, exit_code = 0;
  std::vector<std::string> pos;
  bool garbage = false;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--class" && i + 1 < argc) cls = std::atoi(argv[++i]);
    else if (a == "--classes" && i + 1 < argc) classes = std::atoi(argv[++i]);
    else if (a == "--stride" && i + 1 < argc) stride = std::atoi(argv[++i]);
    else if (a == "--exit" && i + 1 < argc) exit_code = std::atoi(argv[++i]);
    else if (a == "--garbage") garbage = true;
    else pos.push_back(a);
  }
  if (exit_code != 0) return exit_code;
  if (pos.size() != 2) {
    std::cerr << "usage: tlsc_constant [options] IN.tlfr OUT.tlsc\n";
    return 64;
  }
  std::ifstream in(pos[0], std::ios::binary);
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), {}};
  std::ofstream out(pos[1], std::ios::binary);
  if (garbage) {
    out << "not a score file";
    return 0;
  }
  const auto frame = taplab::decode_tlfr(bytes);
  taplab::ScoreMap scores(frame.width / stride, frame.height / stride, classes, stride);
  for (int y = 0; y < scores.height; ++y) {
    for (int x = 0; x < scores.width; ++x) scores.at(x, y, cls) = 1.0f;
  }
  const auto encoded = taplab::encode_tlsc(scores);
  out.write(reinterpret_cast<const char*>(encoded.data()), std::streamsize(encoded.size()));
  return 0;
}
