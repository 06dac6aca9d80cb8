#include "mirror3d/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include <Eigen/SVD>

#include "mirror3d/errors.hpp"

namespace mirror3d {

void RansacConfig::validate() const {
    if (iterations < 1) {
        throw ConfigError("RANSAC needs at least one iteration");
    }
    if (!(inlier_threshold_mm > 0.0)) {
        throw ConfigError("RANSAC inlier threshold must be positive");
    }
    if (min_inliers == 0 && !(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
        throw ConfigError("RANSAC min_inlier_fraction must lie in [0, 1]");
    }
}

std::size_t RansacConfig::required_inliers(std::size_t n, std::size_t sample_size) const {
    if (min_inliers != 0) {
        return std::max(min_inliers, sample_size);
    }
    const auto derived = static_cast<std::size_t>(std::floor(min_inlier_fraction * static_cast<double>(n)));
    return std::max(derived, sample_size);
}

RansacConfig RansacConfig::for_planes() {
    return RansacConfig{};
}

RansacConfig RansacConfig::for_shapes() {
    RansacConfig cfg;
    cfg.iterations = 2000;
    cfg.min_inlier_fraction = 0.1;
    return cfg;
}

Mirror::Mirror(const Plane& p, PixelPolygon r) : plane(p.facing_origin()), region(std::move(r)) {
    if (std::abs(plane.offset()) < 1e-9) {
        throw ConfigError("mirror plane passes through the camera center");
    }
}

Plane fit_plane_svd(std::span<const Point3> points) {
    const auto n = static_cast<Eigen::Index>(points.size());
    if (n < 3) {
        throw DegenerateInput("plane fit needs at least 3 points, got " + std::to_string(n));
    }

    Point3 centroid = Point3::Zero();
    for (const auto& p : points) {
        centroid += p;
    }
    centroid /= static_cast<double>(n);
    Eigen::MatrixX3d centered(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        centered.row(i) = (points[static_cast<std::size_t>(i)] - centroid).transpose();
    }
    const Eigen::JacobiSVD<Eigen::MatrixX3d> spread(centered);
    const auto& s = spread.singularValues();
    if (!(s(0) > 0.0) || s(1) <= 1e-9 * s(0)) {
        throw DegenerateInput("plane fit points are coincident or collinear");
    }

    Eigen::MatrixX4d system(n, 4);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& p = points[static_cast<std::size_t>(i)];
        system.row(i) << p.x(), p.y(), p.z(), 1.0;
    }
    const Eigen::JacobiSVD<Eigen::MatrixX4d> svd(system, Eigen::ComputeFullV);
    const Eigen::Vector4d h = svd.matrixV().col(3);
    return Plane(h(0), h(1), h(2), h(3)).facing_origin();
}

PlaneRansacResult fit_plane_ransac(std::span<const Point3> points, const RansacConfig& cfg) {
    cfg.validate();
    const std::size_t n = points.size();
    if (n < 3) {
        throw DegenerateInput("plane RANSAC needs at least 3 points, got " + std::to_string(n));
    }
    const std::size_t needed = cfg.required_inliers(n, 3);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);

    std::size_t best_count = 0;
    double best_residual = 0.0;
    std::vector<std::size_t> best_inliers;
    std::vector<std::size_t> inliers;
    inliers.reserve(n);

    for (int it = 0; it < cfg.iterations; ++it) {
        const std::size_t i0 = pick(rng);
        std::size_t i1 = pick(rng);
        std::size_t i2 = pick(rng);
        if (i0 == i1 || i0 == i2 || i1 == i2) {
            continue;
        }
        const Vec3 e1 = points[i1] - points[i0];
        const Vec3 e2 = points[i2] - points[i0];
        const Vec3 normal = e1.cross(e2);
        if (normal.norm() <= 1e-12 * e1.norm() * e2.norm()) {
            continue;
        }
        const Plane candidate = Plane::from_point_normal(points[i0], normal);

        inliers.clear();
        double residual = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double dist = std::abs(signed_distance(points[i], candidate));
            if (dist < cfg.inlier_threshold_mm) {
                inliers.push_back(i);
                residual += dist;
            }
        }
        if (inliers.size() > best_count || (inliers.size() == best_count && residual < best_residual)) {
            best_count = inliers.size();
            best_residual = residual;
            best_inliers = inliers;
        }
    }

    if (best_count < needed) {
        throw NoConsensus("plane RANSAC: best consensus " + std::to_string(best_count) + " < required " +
                          std::to_string(needed));
    }

    std::vector<Point3> subset;
    subset.reserve(best_inliers.size());
    for (auto i : best_inliers) {
        subset.push_back(points[i]);
    }
    return {fit_plane_svd(subset), std::move(best_inliers)};
}

Mirror calibrate_mirror(const DepthImage& depth, std::span<const Pixel> marker_pixels, PixelPolygon region,
                        const CameraIntrinsics& k, const RansacConfig& cfg) {
    if (marker_pixels.size() < 3) {
        throw DegenerateInput("mirror calibration needs at least 3 markers");
    }
    std::vector<Point3> markers;
    markers.reserve(marker_pixels.size());
    for (const auto& px : marker_pixels) {
        const auto col = nearest_pixel(px.x);
        const auto row = nearest_pixel(px.y);
        if (!depth.in_bounds(col, row) || depth.at(col, row) == 0) {
            throw InvalidDepth("no depth at marker pixel (" + std::to_string(px.x) + ", " + std::to_string(px.y) +
                               ")");
        }
        markers.push_back(reproject(px, depth.at(col, row), k));
    }
    return Mirror(fit_plane_ransac(markers, cfg).plane, std::move(region));
}

}  // namespace mirror3d
