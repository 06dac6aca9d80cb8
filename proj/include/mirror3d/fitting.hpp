#pragma once

#include <span>
#include <vector>

#include "mirror3d/calibration.hpp"
#include "mirror3d/geometry.hpp"

namespace mirror3d {

struct SphereFit {
    Point3 center = Point3::Zero();
    double radius = 0.0;
    std::size_t inlier_count = 0;
};

/// Cylinder axis line (axis_point + t * axis_dir, unit axis_dir) and radius.
struct CylinderFit {
    Point3 axis_point = Point3::Zero();
    Vec3 axis_dir = Vec3::UnitY();
    double radius = 0.0;
    std::size_t inlier_count = 0;
};

/// RMSE and signed mean of the per-point deviations from a fitted surface.
struct ErrorReport {
    double rmse = 0.0;
    double mean_error = 0.0;
    std::size_t n_points = 0;
};

/// RANSAC over exact 4-point spheres; the best consensus set is refined with
/// an algebraic least-squares sphere fit.
/// Throws DegenerateInput (< 4 points) or NoConsensus.
SphereFit fit_sphere_ransac(std::span<const Point3> points, const RansacConfig& cfg = RansacConfig::for_shapes());

/// Per-point unit normals from the plane fitted to each point's k nearest
/// neighbours (the point included), oriented toward the camera center.
/// Throws DegenerateInput unless 3 <= k_neighbors < points.size().
std::vector<Vec3> estimate_normals(std::span<const Point3> points, std::size_t k_neighbors = 20);

/// RANSAC over hypotheses built from two oriented points: the axis follows the
/// cross product of the normals and passes through the closest approach of the
/// two normal lines. The winner is refined by geometric least squares on its
/// inliers; the radius is the mean inlier distance to the refined axis.
/// Throws DegenerateInput or NoConsensus.
CylinderFit fit_cylinder_ransac(std::span<const Point3> points, std::span<const Vec3> normals,
                                const RansacConfig& cfg = RansacConfig::for_shapes());

double distance_to_line(const Point3& p, const Point3& line_point, const Vec3& unit_dir);

/// Deviations dist(P, center) - radius. Throws EmptyCloud.
ErrorReport error_sphere(std::span<const Point3> points, const SphereFit& fit);

/// Deviations dist(P, axis) - radius. Throws EmptyCloud.
ErrorReport error_cylinder(std::span<const Point3> points, const CylinderFit& fit);

}  // namespace mirror3d
