#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "mirror3d/depth_image.hpp"
#include "mirror3d/reconstruction.hpp"

namespace mirror3d {

// Depth maps are stored as binary PGM (P5) with 16-bit big-endian samples in
// millimeters. 8-bit PGMs are accepted on read.
void write_pgm(std::ostream& out, const DepthImage& depth);
DepthImage read_pgm(std::istream& in);
void write_pgm(const std::filesystem::path& path, const DepthImage& depth);
DepthImage read_pgm(const std::filesystem::path& path);

// Clouds are ASCII PLY: float x y z in millimeters and uchar red green blue
// encoding the source label.
void write_ply(std::ostream& out, const LabeledCloud& cloud);
LabeledCloud read_ply(std::istream& in);
void write_ply(const std::filesystem::path& path, const LabeledCloud& cloud);
LabeledCloud read_ply(const std::filesystem::path& path);

/// Color for a source label in [0, 255]: 0 direct, j mirror j.
std::array<std::uint8_t, 3> label_color(int label);
/// Inverse of label_color; -1 for colors that encode no label.
int color_label(const std::array<std::uint8_t, 3>& rgb);

}  // namespace mirror3d
