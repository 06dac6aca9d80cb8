#include "mirror3d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mirror3d/errors.hpp"

namespace mirror3d {

namespace {

double cross2(const Pixel& o, const Pixel& a, const Pixel& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

int orientation(const Pixel& o, const Pixel& a, const Pixel& b) {
    const double v = cross2(o, a, b);
    return (v > 0.0) - (v < 0.0);
}

bool within_box(const Pixel& p, const Pixel& a, const Pixel& b) {
    return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
           p.y <= std::max(a.y, b.y);
}

bool segments_intersect(const Pixel& p1, const Pixel& p2, const Pixel& q1, const Pixel& q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) {
        return true;
    }
    return (o1 == 0 && within_box(q1, p1, p2)) || (o2 == 0 && within_box(q2, p1, p2)) ||
           (o3 == 0 && within_box(p1, q1, q2)) || (o4 == 0 && within_box(p2, q1, q2));
}

double distance_to_segment_sq(const Pixel& p, const Pixel& a, const Pixel& b) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    const double len_sq = dx * dx + dy * dy;
    double t = 0.0;
    if (len_sq > 0.0) {
        t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len_sq, 0.0, 1.0);
    }
    const double ex = a.x + t * dx - p.x;
    const double ey = a.y + t * dy - p.y;
    return ex * ex + ey * ey;
}

}  // namespace

void CameraIntrinsics::validate() const {
    std::ostringstream why;
    if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
        why << "focal lengths must be positive (fx=" << fx << ", fy=" << fy << ")";
    } else if (width <= 0 || height <= 0) {
        why << "image size must be positive (" << width << "x" << height << ")";
    } else if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
        why << "principal point (" << cx << ", " << cy << ") outside " << width << "x" << height;
    } else {
        return;
    }
    throw ConfigError("invalid camera intrinsics: " + why.str());
}

Plane::Plane(double a, double b, double c, double d) {
    const Vec3 n(a, b, c);
    const double len = n.norm();
    if (!std::isfinite(len) || !std::isfinite(d) || len == 0.0) {
        throw DegenerateInput("plane normal must be finite and nonzero");
    }
    normal_ = n / len;
    offset_ = d / len;
}

Plane Plane::from_point_normal(const Point3& point, const Vec3& normal) {
    return Plane(normal.x(), normal.y(), normal.z(), -normal.dot(point));
}

Plane Plane::facing_origin() const {
    if (offset_ >= 0.0) {
        return *this;
    }
    Plane flipped;
    flipped.normal_ = -normal_;
    flipped.offset_ = -offset_;
    return flipped;
}

PixelPolygon::PixelPolygon(std::vector<Pixel> vertices) : vertices_(std::move(vertices)) {
    const std::size_t n = vertices_.size();
    if (n < 3) {
        throw ConfigError("polygon needs at least 3 vertices");
    }
    double area2 = 0.0;
    min_x_ = max_x_ = vertices_[0].x;
    min_y_ = max_y_ = vertices_[0].y;
    for (std::size_t i = 0; i < n; ++i) {
        const Pixel& p = vertices_[i];
        const Pixel& q = vertices_[(i + 1) % n];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw ConfigError("polygon vertex is not finite");
        }
        area2 += p.x * q.y - q.x * p.y;
        min_x_ = std::min(min_x_, p.x);
        max_x_ = std::max(max_x_, p.x);
        min_y_ = std::min(min_y_, p.y);
        max_y_ = std::max(max_y_, p.y);
    }
    if (area2 == 0.0) {
        throw ConfigError("polygon has zero area");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) {
                continue;  // adjacent through the closing edge
            }
            if (segments_intersect(vertices_[i], vertices_[i + 1], vertices_[j], vertices_[(j + 1) % n])) {
                throw ConfigError("polygon edges intersect");
            }
        }
    }
}

Point3 reproject(const Pixel& p, double depth_mm, const CameraIntrinsics& k) {
    if (!(depth_mm > 0.0) || !std::isfinite(depth_mm)) {
        throw InvalidDepth("cannot reproject pixel with depth " + std::to_string(depth_mm));
    }
    return {depth_mm * (p.x - k.cx) / k.fx, depth_mm * (p.y - k.cy) / k.fy, depth_mm};
}

Pixel project(const Point3& p, const CameraIntrinsics& k) {
    if (!(p.z() > 0.0)) {
        throw BehindCamera("cannot project point with z = " + std::to_string(p.z()));
    }
    return {k.fx * (p.x() / p.z()) + k.cx, k.fy * (p.y() / p.z()) + k.cy};
}

Point3 reflect_point(const Point3& p, const Plane& plane) {
    return p - 2.0 * signed_distance(p, plane) * plane.normal();
}

Vec3 reflect_direction(const Vec3& v, const Plane& plane) {
    return v - 2.0 * v.dot(plane.normal()) * plane.normal();
}

double signed_distance(const Point3& p, const Plane& plane) {
    return plane.normal().dot(p) + plane.offset();
}

bool point_in_polygon(const Pixel& p, const PixelPolygon& poly) {
    if (p.x < poly.min_x() || p.x > poly.max_x() || p.y < poly.min_y() || p.y > poly.max_y()) {
        return false;
    }
    const auto& v = poly.vertices();
    const std::size_t n = v.size();
    const double scale = 1.0 + std::max({std::abs(poly.min_x()), std::abs(poly.max_x()),
                                         std::abs(poly.min_y()), std::abs(poly.max_y())});
    const double tol = 1e-9 * scale;
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Pixel& a = v[i];
        const Pixel& b = v[j];
        if (distance_to_segment_sq(p, a, b) <= tol * tol) {
            return true;
        }
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if (p.x < x_cross) {
                inside = !inside;
            }
        }
    }
    return inside;
}

}  // namespace mirror3d
