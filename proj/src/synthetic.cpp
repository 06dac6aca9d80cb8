#include "mirror3d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "mirror3d/errors.hpp"

namespace mirror3d {

namespace {

constexpr double kNoHit = std::numeric_limits<double>::infinity();
constexpr double kRayEpsilon = 1e-6;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double smallest_positive_root(double a, double b, double c) {
    const double disc = b * b - 4.0 * a * c;
    if (disc < 0.0 || a == 0.0) {
        return kNoHit;
    }
    const double sq = std::sqrt(disc);
    // Numerically stable pair of roots.
    const double q = -0.5 * (b + std::copysign(sq, b));
    double t0 = q / a;
    double t1 = q != 0.0 ? c / q : t0;
    if (t0 > t1) {
        std::swap(t0, t1);
    }
    if (t0 > kRayEpsilon) {
        return t0;
    }
    if (t1 > kRayEpsilon) {
        return t1;
    }
    return kNoHit;
}

double intersect(const Sphere& s, const Point3& o, const Vec3& d) {
    const Vec3 oc = o - s.center;
    return smallest_positive_root(d.dot(d), 2.0 * d.dot(oc), oc.dot(oc) - s.radius * s.radius);
}

double intersect(const Cylinder& cyl, const Point3& o, const Vec3& d) {
    const Vec3 axis = cyl.axis_dir.normalized();
    const Vec3 oc = o - cyl.axis_point;
    const Vec3 d_perp = d - d.dot(axis) * axis;
    const Vec3 o_perp = oc - oc.dot(axis) * axis;

    double best = kNoHit;
    const double a = d_perp.dot(d_perp);
    if (a > 0.0) {
        const double b = 2.0 * d_perp.dot(o_perp);
        const double c = o_perp.dot(o_perp) - cyl.radius * cyl.radius;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            for (double t : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
                if (t > kRayEpsilon && t < best && std::abs((oc + t * d).dot(axis)) <= cyl.half_length) {
                    best = t;
                }
            }
        }
    }
    const double d_axial = d.dot(axis);
    if (d_axial != 0.0) {
        for (double cap : {-cyl.half_length, cyl.half_length}) {
            const double t = (cap - oc.dot(axis)) / d_axial;
            if (t > kRayEpsilon && t < best) {
                const Vec3 rel = oc + t * d;
                if ((rel - rel.dot(axis) * axis).squaredNorm() <= cyl.radius * cyl.radius) {
                    best = t;
                }
            }
        }
    }
    return best;
}

// Returns the ray parameter and the parametric (s, t) position of the hit.
double intersect(const Rect3& rect, const Point3& o, const Vec3& d, Eigen::Vector2d* st = nullptr) {
    const Vec3 n = rect.edge_u.cross(rect.edge_v);
    const double denom = d.dot(n);
    if (std::abs(denom) < 1e-15 * n.norm() * d.norm()) {
        return kNoHit;
    }
    const double t = (rect.corner - o).dot(n) / denom;
    if (!(t > kRayEpsilon)) {
        return kNoHit;
    }
    const Vec3 rel = o + t * d - rect.corner;
    Eigen::Matrix2d gram;
    gram << rect.edge_u.dot(rect.edge_u), rect.edge_u.dot(rect.edge_v), rect.edge_u.dot(rect.edge_v),
        rect.edge_v.dot(rect.edge_v);
    const Eigen::Vector2d rhs(rel.dot(rect.edge_u), rel.dot(rect.edge_v));
    const Eigen::Vector2d uv = gram.inverse() * rhs;
    if (uv.x() < 0.0 || uv.x() > 1.0 || uv.y() < 0.0 || uv.y() > 1.0) {
        return kNoHit;
    }
    if (st != nullptr) {
        *st = uv;
    }
    return t;
}

double intersect(const Primitive& prim, const Point3& o, const Vec3& d) {
    return std::visit(overloaded{[&](const Sphere& s) { return intersect(s, o, d); },
                                 [&](const Cylinder& c) { return intersect(c, o, d); },
                                 [&](const PlanarPatch& p) { return intersect(p.rect, o, d); }},
                      prim);
}

double nearest_object(const std::vector<Primitive>& objects, const Point3& o, const Vec3& d) {
    double best = kNoHit;
    for (const auto& obj : objects) {
        best = std::min(best, intersect(obj, o, d));
    }
    return best;
}

struct MirrorHit {
    double t = kNoHit;
    std::size_t index = 0;
    Eigen::Vector2d st;
};

MirrorHit nearest_mirror(const std::vector<MirrorRect>& mirrors, const Point3& o, const Vec3& d,
                         std::optional<std::size_t> skip = std::nullopt) {
    MirrorHit hit;
    for (std::size_t j = 0; j < mirrors.size(); ++j) {
        if (skip && *skip == j) {
            continue;
        }
        Eigen::Vector2d st;
        const double t = intersect(mirrors[j].rect, o, d, &st);
        if (t < hit.t) {
            hit = {t, j, st};
        }
    }
    return hit;
}

bool on_marker(const MirrorRect& mirror, const Eigen::Vector2d& st) {
    const Point3 p = mirror.rect.at(st.x(), st.y());
    for (std::size_t i = 0; i < mirror.markers_st.size(); ++i) {
        if ((p - mirror.marker_center(i)).norm() <= mirror.marker_radius_mm) {
            return true;
        }
    }
    return false;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void check_vec(const Vec3& v, const char* what) {
    if (!v.allFinite()) {
        throw ConfigError(std::string(what) + " must be finite");
    }
}

void check_rect(const Rect3& r, const char* what) {
    check_vec(r.corner, what);
    check_vec(r.edge_u, what);
    check_vec(r.edge_v, what);
    if (r.edge_u.cross(r.edge_v).norm() <= 1e-9 * r.edge_u.norm() * r.edge_v.norm() || r.edge_u.norm() == 0.0 ||
        r.edge_v.norm() == 0.0) {
        throw ConfigError(std::string(what) + " edges must be non-zero and non-parallel");
    }
}

}  // namespace

std::vector<Point3> Rect3::corners() const {
    return {corner, corner + edge_u, corner + edge_u + edge_v, corner + edge_v};
}

Plane Rect3::plane() const {
    return Plane::from_point_normal(corner, edge_u.cross(edge_v)).facing_origin();
}

void SceneConfig::validate() const {
    intrinsics.validate();
    if (!(noise_sigma_mm >= 0.0) || !std::isfinite(noise_sigma_mm)) {
        throw ConfigError("noise_sigma_mm must be finite and non-negative");
    }
    for (const auto& obj : objects) {
        std::visit(overloaded{[](const Sphere& s) {
                                  check_vec(s.center, "sphere center");
                                  if (!(s.radius > 0.0)) {
                                      throw ConfigError("sphere radius must be positive");
                                  }
                              },
                              [](const Cylinder& c) {
                                  check_vec(c.axis_point, "cylinder axis point");
                                  check_vec(c.axis_dir, "cylinder axis direction");
                                  if (c.axis_dir.norm() == 0.0) {
                                      throw ConfigError("cylinder axis direction must be nonzero");
                                  }
                                  if (!(c.radius > 0.0) || !(c.half_length > 0.0)) {
                                      throw ConfigError("cylinder radius and half length must be positive");
                                  }
                              },
                              [](const PlanarPatch& p) { check_rect(p.rect, "planar patch"); }},
                   obj);
        if (!(primitive_center(obj).z() > 0.0)) {
            throw ConfigError("objects must lie in front of the camera (z > 0)");
        }
    }
    for (const auto& m : mirrors) {
        check_rect(m.rect, "mirror rectangle");
        for (const auto& c : m.rect.corners()) {
            if (!(c.z() > 0.0)) {
                throw ConfigError("mirror rectangles must lie in front of the camera (z > 0)");
            }
        }
        if (std::abs(m.rect.plane().offset()) < 1e-9) {
            throw ConfigError("mirror plane passes through the camera center");
        }
        if (!(m.marker_radius_mm > 0.0)) {
            throw ConfigError("marker radius must be positive");
        }
        for (const auto& st : m.markers_st) {
            if (!(st.x() >= 0.0 && st.x() <= 1.0 && st.y() >= 0.0 && st.y() <= 1.0)) {
                throw ConfigError("marker positions must lie on the mirror (s, t in [0, 1])");
            }
        }
    }
}

PixelPolygon rasterize_mirror_region(const Rect3& rect, const CameraIntrinsics& k) {
    std::vector<Pixel> vertices;
    for (const auto& c : rect.corners()) {
        vertices.push_back(project(c, k));
    }
    return PixelPolygon(std::move(vertices));
}

RenderOutput render_depth(const SceneConfig& scene) {
    scene.validate();
    const auto& k = scene.intrinsics;

    RenderOutput out;
    out.depth = DepthImage(k.width, k.height);
    out.truth_labels.assign(static_cast<std::size_t>(k.width) * static_cast<std::size_t>(k.height),
                            kBackgroundLabel);
    for (const auto& m : scene.mirrors) {
        out.mirror_regions.push_back(rasterize_mirror_region(m.rect, k));
        out.truth_planes.push_back(m.rect.plane());
        std::vector<Pixel> markers;
        if (scene.render_markers) {
            for (std::size_t i = 0; i < m.markers_st.size(); ++i) {
                markers.push_back(project(m.marker_center(i), k));
            }
        }
        out.marker_pixels.push_back(std::move(markers));
    }

    const Point3 origin = Point3::Zero();
    for (int row = 0; row < k.height; ++row) {
        for (int col = 0; col < k.width; ++col) {
            const Vec3 dir((col - k.cx) / k.fx, (row - k.cy) / k.fy, 1.0);
            const double t_obj = nearest_object(scene.objects, origin, dir);
            const MirrorHit mirror = nearest_mirror(scene.mirrors, origin, dir);

            double z = 0.0;
            int label = kBackgroundLabel;
            if (t_obj < kNoHit && t_obj <= mirror.t) {
                z = t_obj;  // dir.z == 1, so the ray parameter is the depth
                label = 0;
            } else if (mirror.t < kNoHit) {
                const MirrorRect& m = scene.mirrors[mirror.index];
                if (scene.render_markers && on_marker(m, mirror.st)) {
                    z = mirror.t;
                    label = kMarkerLabel;
                } else {
                    const Plane plane = out.truth_planes[mirror.index];
                    const Point3 bounce = mirror.t * dir;
                    const Vec3 reflected = reflect_direction(dir, plane);
                    const double s_obj = nearest_object(scene.objects, bounce, reflected);
                    const MirrorHit second = nearest_mirror(scene.mirrors, bounce, reflected, mirror.index);
                    if (s_obj < kNoHit && s_obj < second.t) {
                        const Point3 real = bounce + s_obj * reflected;
                        z = reflect_point(real, plane).z();
                        label = static_cast<int>(mirror.index) + 1;
                    }
                }
            }

            const std::size_t idx = out.depth.index(col, row);
            out.truth_labels[idx] = label;
            if (z <= 0.0) {
                continue;
            }
            if (scene.noise_sigma_mm > 0.0) {
                std::mt19937_64 engine(splitmix64(scene.seed ^ splitmix64(idx)));
                std::normal_distribution<double> noise(0.0, scene.noise_sigma_mm);
                z += noise(engine);
            }
            const double quantized = std::round(z);
            out.depth.data()[idx] =
                (quantized >= 1.0 && quantized <= 65535.0) ? static_cast<std::uint16_t>(quantized) : 0;
        }
    }
    return out;
}

Point3 primitive_center(const Primitive& object) {
    return std::visit(overloaded{[](const Sphere& s) { return s.center; },
                                 [](const Cylinder& c) { return c.axis_point; },
                                 [](const PlanarPatch& p) { return p.rect.center(); }},
                      object);
}

std::pair<Point3, Point3> primitive_bounds(const Primitive& object) {
    return std::visit(
        overloaded{[](const Sphere& s) {
                       const Vec3 r = Vec3::Constant(s.radius);
                       return std::pair<Point3, Point3>{s.center - r, s.center + r};
                   },
                   [](const Cylinder& c) {
                       const Vec3 a = c.axis_dir.normalized();
                       Vec3 ext;
                       for (int i = 0; i < 3; ++i) {
                           ext(i) = c.half_length * std::abs(a(i)) +
                                    c.radius * std::sqrt(std::max(0.0, 1.0 - a(i) * a(i)));
                       }
                       return std::pair<Point3, Point3>{c.axis_point - ext, c.axis_point + ext};
                   },
                   [](const PlanarPatch& p) {
                       Point3 lo = p.rect.corner;
                       Point3 hi = p.rect.corner;
                       for (const auto& c : p.rect.corners()) {
                           lo = lo.cwiseMin(c);
                           hi = hi.cwiseMax(c);
                       }
                       return std::pair<Point3, Point3>{lo, hi};
                   }},
        object);
}

namespace {

Primitive moved_to(const Primitive& object, const Point3& target) {
    const Vec3 shift = target - primitive_center(object);
    return std::visit(overloaded{[&](Sphere s) -> Primitive {
                                     s.center += shift;
                                     return s;
                                 },
                                 [&](Cylinder c) -> Primitive {
                                     c.axis_point += shift;
                                     return c;
                                 },
                                 [&](PlanarPatch p) -> Primitive {
                                     p.rect.corner += shift;
                                     return p;
                                 }},
                      object);
}

}  // namespace

SceneConfig make_two_mirror_scene(double angle_deg, const Primitive& object, double distance_mm,
                                  const TwoMirrorLayout& layout) {
    if (!(angle_deg > 0.0 && angle_deg < 180.0)) {
        throw ConfigError("mirror angle must lie strictly between 0 and 180 degrees, got " +
                          std::to_string(angle_deg));
    }
    if (!(distance_mm > 0.0)) {
        throw ConfigError("object distance must be positive");
    }
    layout.intrinsics.validate();

    SceneConfig scene;
    scene.intrinsics = layout.intrinsics;
    scene.noise_sigma_mm = layout.noise_sigma_mm;
    scene.seed = layout.seed;
    scene.mirror_angle_deg = angle_deg;

    const Point3 center(0.0, 0.0, distance_mm);
    const Primitive placed = moved_to(object, center);
    scene.objects.push_back(placed);

    const auto [lo, hi] = primitive_bounds(placed);
    const double half_width = 0.5 * std::max(hi.x() - lo.x(), hi.z() - lo.z());
    const double half_height = 0.5 * (hi.y() - lo.y());
    const double gap = layout.mirror_distance_mm > 0.0 ? layout.mirror_distance_mm : half_width + 200.0;
    if (gap <= half_width) {
        throw ConfigError("mirror distance " + std::to_string(gap) + " mm intersects the object");
    }

    const double half = 0.5 * angle_deg * std::numbers::pi / 180.0;
    const Point3 apex(0.0, 0.0, distance_mm + gap / std::sin(half));
    const Vec3 up(0.0, 1.0, 0.0);
    const double height = 2.0 * (half_height + 100.0);
    const double min_near_z = 0.25 * distance_mm;
    const double max_length = (apex.z() - min_near_z) / std::cos(half);

    for (int side : {-1, 1}) {
        const Vec3 along(side * std::sin(half), 0.0, -std::cos(half));
        const Plane plane = Plane::from_point_normal(apex, along.cross(up)).facing_origin();

        // Footprint on the mirror of the rays that see the virtual object.
        const Point3 virtual_center = reflect_point(center, plane);
        const Vec3 view = virtual_center.normalized();
        const double separation = std::acos(std::clamp(view.dot(center.normalized()), -1.0, 1.0));
        const double real_extent = std::asin(std::min(1.0, half_width / distance_mm));
        const double virtual_extent = std::asin(std::min(1.0, half_width / virtual_center.norm()));
        if (separation + virtual_extent <= real_extent) {
            throw ConfigError("object completely occludes its mirror image at " + std::to_string(angle_deg) +
                              " degrees");
        }
        const Vec3 lateral = view.cross(up).normalized();
        double s_min = kNoHit;
        double s_max = -kNoHit;
        for (double offset : {-half_width, 0.0, half_width}) {
            const Vec3 ray = virtual_center + offset * lateral;
            const double denom = plane.normal().dot(ray);
            if (denom >= 0.0) {
                continue;  // ray never crosses the mirror
            }
            const Point3 hit = (-plane.offset() / denom) * ray;
            const double s = (hit - apex).dot(along);
            s_min = std::min(s_min, s);
            s_max = std::max(s_max, s);
        }
        if (!(s_max > 0.0)) {
            throw ConfigError("virtual object is not visible in the mirror at " + std::to_string(angle_deg) +
                              " degrees");
        }
        const double length = std::min(s_max + half_width + 100.0, max_length);
        if (length <= std::max(s_min, 0.0)) {
            throw ConfigError("mirror cannot be extended far enough to show the virtual object");
        }

        MirrorRect mirror;
        mirror.rect.corner = apex - 0.5 * height * up;
        mirror.rect.edge_u = length * along;
        mirror.rect.edge_v = height * up;
        const int per_row = std::max(1, (layout.markers_per_mirror + 1) / 2);
        for (int m = 0; m < layout.markers_per_mirror; ++m) {
            const int col = m % per_row;
            const int row = m / per_row;
            const double s = per_row == 1 ? 0.5 : 0.06 + 0.88 * col / (per_row - 1);
            const double t = row == 0 ? 0.1 : 0.9;
            mirror.markers_st.emplace_back(s, t);
        }
        scene.mirrors.push_back(std::move(mirror));
    }
    scene.validate();
    return scene;
}

}  // namespace mirror3d
