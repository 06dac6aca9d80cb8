#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mirror3d/depth_image.hpp"
#include "mirror3d/geometry.hpp"

namespace mirror3d {

/// Parameters shared by every RANSAC estimator in the library.
struct RansacConfig {
    int iterations = 1000;
    double inlier_threshold_mm = 10.0;
    /// Absolute consensus floor. Zero means "derive from min_inlier_fraction".
    std::size_t min_inliers = 0;
    double min_inlier_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const;

    /// Consensus size required for n points and a minimal sample of
    /// `sample_size` points.
    std::size_t required_inliers(std::size_t n, std::size_t sample_size) const;

    /// Mirror-plane calibration defaults: 1000 iterations, 10 mm, n/2.
    static RansacConfig for_planes();
    /// Sphere/cylinder defaults: 2000 iterations, 10 mm, n/10.
    static RansacConfig for_shapes();
};

/// A calibrated mirror: its plane, oriented so the camera is on the positive
/// side, and the image region where it is visible.
struct Mirror {
    Mirror() = default;
    /// Throws ConfigError if the plane passes through the camera center.
    Mirror(const Plane& plane, PixelPolygon region);

    Plane plane;
    PixelPolygon region;
};

/// Least-squares solution of the homogeneous system [X Y Z 1][a b c d]^T = 0
/// via SVD, returned with unit normal and facing the origin.
/// Throws DegenerateInput for fewer than 3 points or collinear points.
Plane fit_plane_svd(std::span<const Point3> points);

struct PlaneRansacResult {
    Plane plane;
    /// Inliers of the winning hypothesis, ascending.
    std::vector<std::size_t> inliers;
};

/// Seeded RANSAC over 3-point samples followed by fit_plane_svd on the best
/// consensus set. Throws NoConsensus when the best set is too small.
PlaneRansacResult fit_plane_ransac(std::span<const Point3> points, const RansacConfig& cfg);

/// Reprojects the marker pixels (rounded to the nearest pixel for the depth
/// lookup) and fits the mirror plane with fit_plane_ransac.
Mirror calibrate_mirror(const DepthImage& depth, std::span<const Pixel> marker_pixels, PixelPolygon region,
                        const CameraIntrinsics& k, const RansacConfig& cfg);

}  // namespace mirror3d
