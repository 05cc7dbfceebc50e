#pragma once

#include <filesystem>

#include "taplab/frame.hpp"

namespace taplab {

// Binary netpbm: frames as P6, label maps as P5 with the class id as the grey value.

void write_ppm(const std::filesystem::path& path, const FrameBuffer& frame);
FrameBuffer read_ppm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_pgm(const std::filesystem::path& path);

}  // namespace taplab
