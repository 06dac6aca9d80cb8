#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "mirror3d/depth_image.hpp"
#include "mirror3d/geometry.hpp"

namespace mirror3d {

// Analytic scenes rendered as a matching-based depth sensor would see them:
// a pixel whose ray bounces off a mirror reports the depth of the virtual
// point behind the mirror.

struct Sphere {
    Point3 center;
    double radius = 0.0;
};

/// Closed finite cylinder; axis_point is the center of the axis segment.
struct Cylinder {
    Point3 axis_point;
    Vec3 axis_dir{0.0, 1.0, 0.0};
    double radius = 0.0;
    double half_length = 0.0;
};

/// Parallelogram corner + s*edge_u + t*edge_v, s, t in [0, 1].
struct Rect3 {
    Point3 corner;
    Vec3 edge_u;
    Vec3 edge_v;

    Point3 at(double s, double t) const { return corner + s * edge_u + t * edge_v; }
    Point3 center() const { return at(0.5, 0.5); }
    /// corner, corner+u, corner+u+v, corner+v
    std::vector<Point3> corners() const;
    Plane plane() const;
};

/// Bounded opaque plane, e.g. a wall or a table top.
struct PlanarPatch {
    Rect3 rect;
};

using Primitive = std::variant<Sphere, Cylinder, PlanarPatch>;

/// A planar mirror. Markers are small opaque discs lying on the mirror
/// surface, placed at parametric (s, t) positions; they are only drawn when
/// the scene asks for them.
struct MirrorRect {
    Rect3 rect;
    std::vector<Eigen::Vector2d> markers_st;
    double marker_radius_mm = 15.0;

    Point3 marker_center(std::size_t i) const { return rect.at(markers_st[i].x(), markers_st[i].y()); }
};

struct SceneConfig {
    CameraIntrinsics intrinsics;
    std::vector<Primitive> objects;
    std::vector<MirrorRect> mirrors;
    bool render_markers = false;
    double noise_sigma_mm = 5.0;
    std::uint64_t seed = 0;
    /// Wedge opening for two-mirror scenes; informational only.
    std::optional<double> mirror_angle_deg;

    /// Throws ConfigError.
    void validate() const;
};

inline constexpr int kBackgroundLabel = -1;
inline constexpr int kMarkerLabel = -2;

struct RenderOutput {
    DepthImage depth;
    std::vector<PixelPolygon> mirror_regions;
    std::vector<Plane> truth_planes;
    /// Per pixel, row-major: 0 direct object, j mirror j (1-based),
    /// kBackgroundLabel, or kMarkerLabel.
    std::vector<int> truth_labels;
    /// Projected marker centers per mirror (empty unless markers rendered).
    std::vector<std::vector<Pixel>> marker_pixels;
};

/// Ray-casts every pixel with at most one mirror bounce, then applies seeded
/// per-pixel Gaussian noise and 1 mm quantization.
RenderOutput render_depth(const SceneConfig& scene);

/// Image-space quadrilateral of a 3D rectangle, corners in Rect3::corners()
/// order. Throws BehindCamera if a corner has z <= 0.
PixelPolygon rasterize_mirror_region(const Rect3& rect, const CameraIntrinsics& k);

struct TwoMirrorLayout {
    CameraIntrinsics intrinsics;
    /// Distance from the object center to each mirror plane. Zero selects
    /// the object's horizontal extent plus 200 mm.
    double mirror_distance_mm = 0.0;
    double noise_sigma_mm = 5.0;
    std::uint64_t seed = 0;
    int markers_per_mirror = 8;
};

/// Two vertical mirrors forming a wedge of opening `angle_deg` behind the
/// object, whose center is moved to (0, 0, distance_mm) on the wedge
/// bisector. Mirrors are sized so that both virtual objects are visible.
/// Throws ConfigError for angles outside (0, 180) or an infeasible layout.
SceneConfig make_two_mirror_scene(double angle_deg, const Primitive& object, double distance_mm,
                                  const TwoMirrorLayout& layout = {});

/// Center of the primitive (sphere center, cylinder axis midpoint, patch
/// center).
Point3 primitive_center(const Primitive& object);

/// Axis-aligned bounds of the primitive: {min, max}.
std::pair<Point3, Point3> primitive_bounds(const Primitive& object);

}  // namespace mirror3d
