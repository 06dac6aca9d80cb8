#include "mirror3d/depth_image.hpp"

#include <algorithm>
#include <string>

#include "mirror3d/errors.hpp"

namespace mirror3d {

DepthImage::DepthImage(int width, int height)
    : DepthImage(width, height,
                 std::vector<std::uint16_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                            static_cast<std::size_t>(std::max(height, 0)))) {}

DepthImage::DepthImage(int width, int height, std::vector<std::uint16_t> data)
    : width_(width), height_(height), data_(std::move(data)) {
    if (width <= 0 || height <= 0) {
        throw ConfigError("depth image size must be positive");
    }
    if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw ConfigError("depth buffer holds " + std::to_string(data_.size()) + " samples, expected " +
                          std::to_string(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)));
    }
}

std::size_t DepthImage::count_valid() const {
    return static_cast<std::size_t>(std::count_if(data_.begin(), data_.end(), [](std::uint16_t v) { return v != 0; }));
}

}  // namespace mirror3d
