#include "taplab/image_io.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>
#include <string>

namespace taplab {

namespace {

void write_netpbm(const std::filesystem::path& path, const char* magic, int w, int h,
                  const std::uint8_t* data, std::size_t n) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << magic << '\n' << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(data), std::streamsize(n));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

// Reads the header and leaves the stream at the first payload byte.
std::pair<int, int> read_netpbm_header(std::istream& in, const std::string& magic,
                                       const std::filesystem::path& path) {
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
      } else {
        t.push_back(c);
      }
    }
    return t;
  };
  if (token() != magic) throw std::runtime_error(path.string() + ": expected " + magic);
  try {
    const int w = std::stoi(token());
    const int h = std::stoi(token());
    const int maxval = std::stoi(token());
    if (w <= 0 || h <= 0 || maxval != 255) throw std::runtime_error("");
    return {w, h};
  } catch (const std::exception&) {
    throw std::runtime_error(path.string() + ": malformed netpbm header");
  }
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const FrameBuffer& frame) {
  write_netpbm(path, "P6", frame.width, frame.height, frame.pixels.data(), frame.pixels.size());
}

FrameBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto [w, h] = read_netpbm_header(in, "P6", path);
  FrameBuffer f(w, h);
  in.read(reinterpret_cast<char*>(f.pixels.data()), std::streamsize(f.pixels.size()));
  if (in.gcount() != std::streamsize(f.pixels.size())) {
    throw std::runtime_error(path.string() + ": truncated pixel data");
  }
  return f;
}

void write_pgm(const std::filesystem::path& path, const LabelMap& labels) {
  write_netpbm(path, "P5", labels.width, labels.height, labels.ids.data(), labels.ids.size());
}

LabelMap read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const auto [w, h] = read_netpbm_header(in, "P5", path);
  LabelMap m(w, h);
  in.read(reinterpret_cast<char*>(m.ids.data()), std::streamsize(m.ids.size()));
  if (in.gcount() != std::streamsize(m.ids.size())) {
    throw std::runtime_error(path.string() + ": truncated pixel data");
  }
  return m;
}

}  // namespace taplab
