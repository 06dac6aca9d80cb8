#include "mirror3d/reconstruction.hpp"

#include <algorithm>
#include <cmath>

#include "mirror3d/errors.hpp"

namespace mirror3d {

namespace {

bool is_object_pixel(const DepthImage& depth, const PixelMask& mask, int col, int row) {
    return depth.in_bounds(col, row) && depth.at(col, row) != 0 && (!mask || mask(col, row));
}

struct Sample {
    Pixel pixel;
    double depth_mm;
};

std::optional<Sample> sample_at(const Point3& v, const DepthImage& depth, const PixelMask& mask,
                                const CameraIntrinsics& k, DepthLookup mode) {
    if (!(v.z() > 0.0)) {
        return std::nullopt;
    }
    const Pixel p = project(v, k);
    const auto z = lookup_depth(depth, mask, p, mode);
    if (!z) {
        return std::nullopt;
    }
    return Sample{p, *z};
}

bool carve_voxel(const Point3& v, const DepthImage& depth, const PixelMask& mask, const CameraIntrinsics& k,
                 std::span<const Mirror> mirrors, const CarveConfig& cfg) {
    const auto direct = sample_at(v, depth, mask, k, cfg.lookup);
    if (!direct) {
        return false;
    }
    const Point3 measured = reproject(direct->pixel, direct->depth_mm, k);
    if (std::abs(v.norm() - measured.norm()) < cfg.threshold_mm) {
        return true;
    }
    if (mirrors.empty()) {
        return false;
    }
    for (const auto& mirror : mirrors) {
        const Point3 virt = reflect_point(v, mirror.plane);
        const auto seen = sample_at(virt, depth, mask, k, cfg.lookup);
        if (!seen || !point_in_polygon(seen->pixel, mirror.region)) {
            return false;
        }
        const Point3 measured_virtual = reproject(seen->pixel, seen->depth_mm, k);
        if (std::abs(virt.norm() - measured_virtual.norm()) >= cfg.threshold_mm) {
            return false;
        }
    }
    return true;
}

}  // namespace

VoxelGrid::VoxelGrid(const Point3& origin, double voxel_size_mm, std::array<int, 3> dims, bool filled)
    : origin_(origin), voxel_size_(voxel_size_mm), dims_(dims) {
    if (!(voxel_size_mm > 0.0) || !std::isfinite(voxel_size_mm)) {
        throw ConfigError("voxel size must be positive");
    }
    if (dims[0] <= 0 || dims[1] <= 0 || dims[2] <= 0) {
        throw ConfigError("voxel grid dimensions must be positive");
    }
    if (!origin.allFinite()) {
        throw ConfigError("voxel grid origin must be finite");
    }
    occupancy_.assign(static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) *
                          static_cast<std::size_t>(dims[2]),
                      filled ? 1 : 0);
}

std::size_t VoxelGrid::count_occupied() const {
    return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
}

void CarveConfig::validate() const {
    if (!(threshold_mm > 0.0)) {
        throw ConfigError("carve threshold must be positive");
    }
}

std::optional<double> lookup_depth(const DepthImage& depth, const PixelMask& mask, const Pixel& p,
                                   DepthLookup mode) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
        return std::nullopt;
    }
    const int col = nearest_pixel(p.x);
    const int row = nearest_pixel(p.y);
    if (!is_object_pixel(depth, mask, col, row)) {
        return std::nullopt;
    }
    if (mode == DepthLookup::nearest) {
        return static_cast<double>(depth.at(col, row));
    }

    const double fx = std::floor(p.x);
    const double fy = std::floor(p.y);
    const int c0 = static_cast<int>(fx);
    const int r0 = static_cast<int>(fy);
    const double tx = p.x - fx;
    const double ty = p.y - fy;
    double weighted = 0.0;
    double weight_sum = 0.0;
    for (int dr = 0; dr <= 1; ++dr) {
        for (int dc = 0; dc <= 1; ++dc) {
            const double w = (dc ? tx : 1.0 - tx) * (dr ? ty : 1.0 - ty);
            if (w > 0.0 && is_object_pixel(depth, mask, c0 + dc, r0 + dr)) {
                weighted += w * depth.at(c0 + dc, r0 + dr);
                weight_sum += w;
            }
        }
    }
    if (weight_sum <= 0.0) {
        return static_cast<double>(depth.at(col, row));
    }
    return weighted / weight_sum;
}

LabeledCloud reconstruct_raw(const DepthImage& depth, const PixelMask& mask, const CameraIntrinsics& k,
                             std::span<const Mirror> mirrors) {
    if (depth.width() != k.width || depth.height() != k.height) {
        throw ConfigError("depth image size does not match the camera intrinsics");
    }
    LabeledCloud cloud;
    cloud.points.reserve(depth.count_valid());
    cloud.labels.reserve(depth.count_valid());
    for (int row = 0; row < depth.height(); ++row) {
        for (int col = 0; col < depth.width(); ++col) {
            if (!is_object_pixel(depth, mask, col, row)) {
                continue;
            }
            const Pixel px{static_cast<double>(col), static_cast<double>(row)};
            Point3 p = reproject(px, depth.at(col, row), k);
            int label = kDirectLabel;
            for (std::size_t j = 0; j < mirrors.size(); ++j) {
                if (point_in_polygon(px, mirrors[j].region) && signed_distance(p, mirrors[j].plane) < 0.0) {
                    p = reflect_point(p, mirrors[j].plane);
                    label = static_cast<int>(j) + 1;
                    break;
                }
            }
            cloud.push_back(p, label);
        }
    }
    return cloud;
}

VoxelGrid carve(const VoxelGrid& init, const DepthImage& depth, const PixelMask& mask, const CameraIntrinsics& k,
                std::span<const Mirror> mirrors, const CarveConfig& cfg) {
    cfg.validate();
    if (depth.width() != k.width || depth.height() != k.height) {
        throw ConfigError("depth image size does not match the camera intrinsics");
    }
    VoxelGrid carved = init;
    const auto [nx, ny, nz] = init.dims();
    for (int kz = 0; kz < nz; ++kz) {
        for (int jy = 0; jy < ny; ++jy) {
            for (int ix = 0; ix < nx; ++ix) {
                if (!init.occupied(ix, jy, kz)) {
                    continue;
                }
                carved.set(ix, jy, kz, carve_voxel(init.center(ix, jy, kz), depth, mask, k, mirrors, cfg));
            }
        }
    }
    return carved;
}

LabeledCloud extract_cloud(const VoxelGrid& grid) {
    LabeledCloud cloud;
    const auto [nx, ny, nz] = grid.dims();
    for (int ix = 0; ix < nx; ++ix) {
        for (int jy = 0; jy < ny; ++jy) {
            for (int kz = 0; kz < nz; ++kz) {
                if (grid.occupied(ix, jy, kz)) {
                    cloud.push_back(grid.center(ix, jy, kz), kDirectLabel);
                }
            }
        }
    }
    return cloud;
}

}  // namespace mirror3d
