#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mirror3d {

/// Camera-frame point in millimeters. The camera center is the origin and +z
/// is the optical axis.
using Point3 = Eigen::Vector3d;
using Vec3 = Eigen::Vector3d;

/// Continuous image coordinates. Integer values address pixel centers.
struct Pixel {
    double x = 0.0;
    double y = 0.0;
};

/// Pinhole intrinsics plus the image size they belong to.
struct CameraIntrinsics {
    double fx = 525.0;
    double fy = 525.0;
    double cx = 319.5;
    double cy = 239.5;
    int width = 640;
    int height = 480;

    /// Throws ConfigError when fx/fy are not positive or the principal point
    /// falls outside the image.
    void validate() const;

    bool contains(const Pixel& p) const {
        return p.x >= 0.0 && p.y >= 0.0 && p.x < width && p.y < height;
    }
};

/// Plane a*x + b*y + c*z + d = 0 with unit normal (a, b, c).
///
/// Construction normalizes all four coefficients by the normal length, so
/// (a, b, c, d) and (s*a, s*b, s*c, s*d) give the same plane for s > 0. The
/// orientation is kept as given; use facing_origin() to flip it so that the
/// camera center has positive signed distance.
class Plane {
public:
    Plane() = default;
    Plane(double a, double b, double c, double d);

    static Plane from_point_normal(const Point3& point, const Vec3& normal);

    /// Same plane, oriented so signed_distance(origin) >= 0.
    Plane facing_origin() const;

    double a() const { return normal_.x(); }
    double b() const { return normal_.y(); }
    double c() const { return normal_.z(); }
    double d() const { return offset_; }
    const Vec3& normal() const { return normal_; }
    double offset() const { return offset_; }

private:
    Vec3 normal_{0.0, 0.0, 1.0};
    double offset_ = 0.0;
};

/// Simple polygon in image space, at least three vertices.
class PixelPolygon {
public:
    PixelPolygon() = default;
    /// Throws ConfigError for fewer than 3 vertices, non-finite coordinates
    /// or crossing edges.
    explicit PixelPolygon(std::vector<Pixel> vertices);

    const std::vector<Pixel>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }

    double min_x() const { return min_x_; }
    double max_x() const { return max_x_; }
    double min_y() const { return min_y_; }
    double max_y() const { return max_y_; }

private:
    std::vector<Pixel> vertices_;
    double min_x_ = 0.0;
    double max_x_ = 0.0;
    double min_y_ = 0.0;
    double max_y_ = 0.0;
};

/// Back-projects pixel p at z-depth `depth_mm`:
/// [X, Y, Z] = Z * diag(1/fx, 1/fy, 1) * [x - cx, y - cy, 1].
/// Throws InvalidDepth for depth <= 0 or non-finite depth.
Point3 reproject(const Pixel& p, double depth_mm, const CameraIntrinsics& k);

/// Pinhole projection; the result may lie outside the image.
/// Throws BehindCamera for p.z <= 0.
Pixel project(const Point3& p, const CameraIntrinsics& k);

/// Mirror image of p through the plane: p - 2 (n.p + d) n.
Point3 reflect_point(const Point3& p, const Plane& plane);

/// Mirror image of a direction vector (the plane offset does not apply).
Vec3 reflect_direction(const Vec3& v, const Plane& plane);

double signed_distance(const Point3& p, const Plane& plane);

/// Even-odd containment. Points on an edge or vertex count as inside.
bool point_in_polygon(const Pixel& p, const PixelPolygon& poly);

}  // namespace mirror3d
