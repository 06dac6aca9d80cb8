#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

namespace mirror3d {

/// Row-major 16-bit depth map in millimeters; 0 marks a missing measurement.
class DepthImage {
public:
    DepthImage() = default;
    DepthImage(int width, int height);
    DepthImage(int width, int height, std::vector<std::uint16_t> data);

    int width() const { return width_; }
    int height() const { return height_; }

    std::uint16_t at(int col, int row) const { return data_[index(col, row)]; }
    void set(int col, int row, std::uint16_t depth_mm) { data_[index(col, row)] = depth_mm; }

    bool in_bounds(int col, int row) const { return col >= 0 && row >= 0 && col < width_ && row < height_; }
    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(col);
    }

    const std::vector<std::uint16_t>& data() const { return data_; }
    std::vector<std::uint16_t>& data() { return data_; }

    std::size_t count_valid() const;

    friend bool operator==(const DepthImage&, const DepthImage&) = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<std::uint16_t> data_;
};

/// Integer pixel containing continuous coordinate `coord`; pixel i covers
/// [i - 0.5, i + 0.5).
inline int nearest_pixel(double coord) {
    return static_cast<int>(std::floor(coord + 0.5));
}

/// Optional object-region predicate over integer pixel (col, row). An empty
/// function accepts every pixel.
using PixelMask = std::function<bool(int col, int row)>;

}  // namespace mirror3d
