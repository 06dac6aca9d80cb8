#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mirror3d/calibration.hpp"
#include "mirror3d/depth_image.hpp"
#include "mirror3d/geometry.hpp"

namespace mirror3d {

/// Label of points measured directly by the camera; mirror j (0-based in the
/// mirror list) produces label j + 1.
inline constexpr int kDirectLabel = 0;

/// Points with a per-point source label.
struct LabeledCloud {
    std::vector<Point3> points;
    std::vector<int> labels;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
    void push_back(const Point3& p, int label) {
        points.push_back(p);
        labels.push_back(label);
    }
};

/// Axis-aligned occupancy volume in the camera frame. Voxel (i, j, k) has its
/// center at origin + voxel_size * (i + 1/2, j + 1/2, k + 1/2); storage is
/// x-fastest.
class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(const Point3& origin, double voxel_size_mm, std::array<int, 3> dims, bool filled);

    const Point3& origin() const { return origin_; }
    double voxel_size() const { return voxel_size_; }
    const std::array<int, 3>& dims() const { return dims_; }
    std::size_t voxel_count() const { return occupancy_.size(); }

    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * static_cast<std::size_t>(dims_[1]) + static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(dims_[0]) +
               static_cast<std::size_t>(i);
    }
    Point3 center(int i, int j, int k) const {
        return origin_ + voxel_size_ * Point3(i + 0.5, j + 0.5, k + 0.5);
    }

    bool occupied(int i, int j, int k) const { return occupancy_[index(i, j, k)] != 0; }
    void set(int i, int j, int k, bool value) { occupancy_[index(i, j, k)] = value ? 1 : 0; }

    const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }
    std::vector<std::uint8_t>& occupancy() { return occupancy_; }
    std::size_t count_occupied() const;

private:
    Point3 origin_ = Point3::Zero();
    double voxel_size_ = 10.0;
    std::array<int, 3> dims_{0, 0, 0};
    std::vector<std::uint8_t> occupancy_;
};

enum class DepthLookup { nearest, bilinear };

struct CarveConfig {
    /// Maximum radial deviation between a voxel and the measured surface.
    double threshold_mm = 15.0;
    DepthLookup lookup = DepthLookup::nearest;

    void validate() const;
};

/// Depth seen at continuous pixel p, or nullopt if the nearest pixel is not an
/// object pixel (out of bounds, zero depth, or rejected by the mask). With
/// bilinear lookup the value is interpolated over the valid neighbours.
std::optional<double> lookup_depth(const DepthImage& depth, const PixelMask& mask, const Pixel& p,
                                   DepthLookup mode);

/// Raw cloud: every object pixel is back-projected; a point that lies behind
/// the first mirror whose region contains its pixel is reflected through that
/// mirror. Output follows row-major pixel order.
LabeledCloud reconstruct_raw(const DepthImage& depth, const PixelMask& mask, const CameraIntrinsics& k,
                             std::span<const Mirror> mirrors);

/// Space carving. A voxel survives when its radial depth agrees with the
/// direct measurement, or, failing that, when its reflection through every
/// mirror agrees with the measurement inside that mirror's region. Voxels
/// cleared in `init` stay cleared.
VoxelGrid carve(const VoxelGrid& init, const DepthImage& depth, const PixelMask& mask, const CameraIntrinsics& k,
                std::span<const Mirror> mirrors, const CarveConfig& cfg);

/// One point per occupied voxel at its center, labelled kDirectLabel, in
/// (i, j, k) lexicographic order.
LabeledCloud extract_cloud(const VoxelGrid& grid);

}  // namespace mirror3d
