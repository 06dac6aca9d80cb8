#include <cmath>
#include <numbers>
#include <queue>

#include <gtest/gtest.h>

#include "mirror3d/errors.hpp"
#include "mirror3d/reconstruction.hpp"
#include "mirror3d/synthetic.hpp"

using namespace mirror3d;

namespace {

CameraIntrinsics centered_camera() {
    return CameraIntrinsics{525, 525, 320, 240, 640, 480};
}

// Nearest positive root of |t*ray - c| = r, or NaN.
double ray_sphere(const Vec3& ray, const Point3& c, double r) {
    const double a = ray.squaredNorm();
    const double b = -2 * ray.dot(c);
    const double cc = c.squaredNorm() - r * r;
    const double disc = b * b - 4 * a * cc;
    if (disc < 0) {
        return std::nan("");
    }
    return (-b - std::sqrt(disc)) / (2 * a);
}

int count_components(const DepthImage& depth) {
    std::vector<char> seen(depth.data().size(), 0);
    int components = 0;
    for (int row = 0; row < depth.height(); ++row) {
        for (int col = 0; col < depth.width(); ++col) {
            if (depth.at(col, row) == 0 || seen[depth.index(col, row)]) {
                continue;
            }
            ++components;
            std::queue<std::pair<int, int>> q;
            q.push({col, row});
            seen[depth.index(col, row)] = 1;
            while (!q.empty()) {
                const auto [c, r] = q.front();
                q.pop();
                for (auto [dc, dr] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
                    const int nc = c + dc;
                    const int nr = r + dr;
                    if (depth.in_bounds(nc, nr) && depth.at(nc, nr) != 0 && !seen[depth.index(nc, nr)]) {
                        seen[depth.index(nc, nr)] = 1;
                        q.push({nc, nr});
                    }
                }
            }
        }
    }
    return components;
}

SceneConfig noiseless_two_mirror(double angle, const Primitive& object) {
    TwoMirrorLayout layout;
    layout.noise_sigma_mm = 0;
    return make_two_mirror_scene(angle, object, 2000, layout);
}

}  // namespace

TEST(RenderDepth, EmptySceneIsAllZero) {
    SceneConfig scene;
    const RenderOutput out = render_depth(scene);
    EXPECT_EQ(out.depth.width(), 640);
    EXPECT_EQ(out.depth.count_valid(), 0u);
    EXPECT_TRUE(out.mirror_regions.empty());
    for (int l : out.truth_labels) {
        EXPECT_EQ(l, kBackgroundLabel);
    }
}

TEST(RenderDepth, SphereOnOpticalAxis) {
    SceneConfig scene;
    scene.intrinsics = centered_camera();
    scene.noise_sigma_mm = 0;
    scene.objects.push_back(Sphere{{0, 0, 2000}, 115});
    const RenderOutput out = render_depth(scene);
    EXPECT_EQ(out.depth.at(320, 240), 1885);
    EXPECT_EQ(out.truth_labels[out.depth.index(320, 240)], kDirectLabel);
}

TEST(RenderDepth, NoiselessDirectPixelsMatchAnalyticIntersection) {
    SceneConfig scene;
    scene.noise_sigma_mm = 0;
    const Point3 c(40, -30, 1700);
    scene.objects.push_back(Sphere{c, 200});
    const RenderOutput out = render_depth(scene);
    std::size_t hits = 0;
    for (int row = 0; row < 480; ++row) {
        for (int col = 0; col < 640; ++col) {
            const Vec3 ray((col - scene.intrinsics.cx) / scene.intrinsics.fx,
                           (row - scene.intrinsics.cy) / scene.intrinsics.fy, 1.0);
            const double t = ray_sphere(ray, c, 200);
            if (std::isnan(t)) {
                EXPECT_EQ(out.depth.at(col, row), 0);
                continue;
            }
            ++hits;
            EXPECT_LE(std::abs(out.depth.at(col, row) - t * ray.z()), 0.5);
        }
    }
    EXPECT_GT(hits, 10000u);
}

TEST(RenderDepth, MirrorPixelsReflectOntoTheSurface) {
    const SceneConfig scene = noiseless_two_mirror(120, Sphere{Point3::Zero(), 115});
    const RenderOutput out = render_depth(scene);
    const Sphere& s = std::get<Sphere>(scene.objects.front());
    std::size_t mirror_pixels = 0;
    for (int row = 0; row < 480; ++row) {
        for (int col = 0; col < 640; ++col) {
            const int label = out.truth_labels[out.depth.index(col, row)];
            if (label < 1) {
                continue;
            }
            ++mirror_pixels;
            const Pixel px{double(col), double(row)};
            EXPECT_TRUE(point_in_polygon(px, out.mirror_regions[static_cast<std::size_t>(label - 1)]));
            const Point3 virt = reproject(px, out.depth.at(col, row), scene.intrinsics);
            const Point3 real = reflect_point(virt, out.truth_planes[static_cast<std::size_t>(label - 1)]);
            EXPECT_LT(std::abs((real - s.center).norm() - s.radius), 1.0);
        }
    }
    EXPECT_GT(mirror_pixels, 500u);
}

TEST(RenderDepth, CylinderMirrorPixelsReflectOntoTheSurface) {
    const SceneConfig scene = noiseless_two_mirror(110, Cylinder{Point3::Zero(), Vec3(0, 1, 0), 150, 250});
    const RenderOutput out = render_depth(scene);
    const Cylinder& c = std::get<Cylinder>(scene.objects.front());
    std::size_t checked = 0;
    for (int row = 0; row < 480; ++row) {
        for (int col = 0; col < 640; ++col) {
            const int label = out.truth_labels[out.depth.index(col, row)];
            if (label < 0) {
                continue;
            }
            const Pixel px{double(col), double(row)};
            Point3 p = reproject(px, out.depth.at(col, row), scene.intrinsics);
            if (label > 0) {
                p = reflect_point(p, out.truth_planes[static_cast<std::size_t>(label - 1)]);
            }
            const Vec3 rel = p - c.axis_point;
            const double along = rel.dot(c.axis_dir);
            const double radial = (rel - along * c.axis_dir).norm();
            // On the side wall or on one of the caps.
            const bool on_wall = std::abs(radial - c.radius) < 1.0 && std::abs(along) <= c.half_length + 1.0;
            const bool on_cap = std::abs(std::abs(along) - c.half_length) < 1.0 && radial <= c.radius + 1.0;
            EXPECT_TRUE(on_wall || on_cap) << col << "," << row;
            ++checked;
        }
    }
    EXPECT_GT(checked, 5000u);
}

TEST(RenderDepth, DeterministicUnderSeedAndNoiseChangesWithSeed) {
    TwoMirrorLayout layout;
    layout.seed = 9;
    const SceneConfig a = make_two_mirror_scene(120, Sphere{Point3::Zero(), 115}, 2000, layout);
    const RenderOutput r1 = render_depth(a);
    const RenderOutput r2 = render_depth(a);
    EXPECT_EQ(r1.depth, r2.depth);
    EXPECT_EQ(r1.truth_labels, r2.truth_labels);
    SceneConfig b = a;
    b.seed = 10;
    const RenderOutput r3 = render_depth(b);
    EXPECT_FALSE(r1.depth == r3.depth);
    EXPECT_EQ(r1.truth_labels, r3.truth_labels);
}

TEST(RenderDepth, NoiseHasRequestedSpread) {
    SceneConfig scene;
    scene.intrinsics = centered_camera();
    scene.noise_sigma_mm = 5;
    scene.seed = 3;
    scene.objects.push_back(PlanarPatch{Rect3{{-3000, -3000, 1500}, {6000, 0, 0}, {0, 6000, 0}}});
    const RenderOutput out = render_depth(scene);
    double sum = 0;
    double sum2 = 0;
    for (auto d : out.depth.data()) {
        sum += d - 1500.0;
        sum2 += (d - 1500.0) * (d - 1500.0);
    }
    const double n = static_cast<double>(out.depth.data().size());
    EXPECT_NEAR(sum / n, 0.0, 0.1);
    // Rounding to whole millimetres adds 1/12 mm^2 of variance.
    EXPECT_NEAR(std::sqrt(sum2 / n), std::sqrt(25.0 + 1.0 / 12.0), 0.1);
}

TEST(RenderDepth, NearestObjectOccludesMirror) {
    SceneConfig scene;
    scene.noise_sigma_mm = 0;
    scene.objects.push_back(Sphere{{0, 0, 1000}, 100});
    MirrorRect m;
    m.rect = Rect3{{-1000, -1000, 2000}, {2000, 0, 0}, {0, 2000, 0}};
    scene.mirrors.push_back(m);
    const RenderOutput out = render_depth(scene);
    const std::size_t center = out.depth.index(320, 240);
    EXPECT_EQ(out.truth_labels[center], kDirectLabel);
    EXPECT_NEAR(out.depth.data()[center], 900, 1);
    // The sphere's image sits right behind it; rays beside the sphere bounce
    // off the mirror into empty space.
    const std::size_t beside = out.depth.index(320 + 80, 240);
    EXPECT_EQ(out.truth_labels[beside], kBackgroundLabel);
    EXPECT_EQ(out.depth.data()[beside], 0);
}

TEST(RenderDepth, MarkersAreOpaqueWhenRendered) {
    TwoMirrorLayout layout;
    layout.noise_sigma_mm = 0;
    SceneConfig scene = make_two_mirror_scene(120, Sphere{Point3::Zero(), 115}, 2000, layout);
    scene.render_markers = true;
    const RenderOutput out = render_depth(scene);
    ASSERT_EQ(out.marker_pixels.size(), 2u);
    for (std::size_t j = 0; j < 2; ++j) {
        ASSERT_EQ(out.marker_pixels[j].size(), 8u);
        for (std::size_t i = 0; i < out.marker_pixels[j].size(); ++i) {
            const Pixel& px = out.marker_pixels[j][i];
            const int col = static_cast<int>(std::floor(px.x + 0.5));
            const int row = static_cast<int>(std::floor(px.y + 0.5));
            EXPECT_EQ(out.truth_labels[out.depth.index(col, row)], kMarkerLabel);
            EXPECT_TRUE(point_in_polygon(px, out.mirror_regions[j]));
            const Point3 p = reproject({double(col), double(row)}, out.depth.at(col, row), scene.intrinsics);
            EXPECT_LT(std::abs(signed_distance(p, out.truth_planes[j])), 2.0);
        }
    }
}

TEST(RasterizeMirrorRegion, Examples) {
    const CameraIntrinsics k{500, 500, 320, 240, 640, 480};
    const PixelPolygon poly = rasterize_mirror_region(Rect3{{-440, -280, 1000}, {200, 0, 0}, {0, 400, 0}}, k);
    const std::vector<std::pair<double, double>> expected{{100, 100}, {200, 100}, {200, 300}, {100, 300}};
    ASSERT_EQ(poly.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_NEAR(poly.vertices()[i].x, expected[i].first, 1e-9);
        EXPECT_NEAR(poly.vertices()[i].y, expected[i].second, 1e-9);
    }

    const PixelPolygon sym = rasterize_mirror_region(Rect3{{-100, -50, 800}, {200, 0, 0}, {0, 100, 0}}, k);
    for (std::size_t i = 0; i < 4; ++i) {
        const auto& a = sym.vertices()[i];
        const auto& b = sym.vertices()[(i + 2) % 4];
        EXPECT_NEAR(a.x + b.x, 2 * k.cx, 1e-9);
        EXPECT_NEAR(a.y + b.y, 2 * k.cy, 1e-9);
    }
    EXPECT_THROW(rasterize_mirror_region(Rect3{{-100, -50, -10}, {200, 0, 0}, {0, 100, 20}}, k), BehindCamera);
}

TEST(TwoMirrorScene, ThreeDisjointImages) {
    const SceneConfig scene = noiseless_two_mirror(120, Sphere{Point3::Zero(), 115});
    EXPECT_EQ(scene.mirror_angle_deg.value_or(0), 120);
    const RenderOutput out = render_depth(scene);
    std::array<std::size_t, 3> counts{};
    for (int l : out.truth_labels) {
        if (l >= 0) {
            ++counts.at(static_cast<std::size_t>(l));
        }
    }
    for (auto c : counts) {
        EXPECT_GT(c, 500u);
    }
    EXPECT_GE(count_components(out.depth), 3);
}

TEST(TwoMirrorScene, WedgeGeometry) {
    for (double angle : {60.0, 90.0, 120.0, 150.0}) {
        const SceneConfig scene = noiseless_two_mirror(angle, Sphere{Point3::Zero(), 115});
        ASSERT_EQ(scene.mirrors.size(), 2u);
        const Plane p1 = scene.mirrors[0].rect.plane();
        const Plane p2 = scene.mirrors[1].rect.plane();
        const double to_axis_1 = std::acos(-p1.c()) * 180 / std::numbers::pi;
        const double to_axis_2 = std::acos(-p2.c()) * 180 / std::numbers::pi;
        EXPECT_NEAR(to_axis_1, 90 - angle / 2, 1e-9);
        EXPECT_NEAR(to_axis_2, 90 - angle / 2, 1e-9);
        EXPECT_LT(p1.a() * p2.a(), 0.0);  // one on each side of the bisector
        EXPECT_NEAR(std::acos(-p1.normal().dot(p2.normal())) * 180 / std::numbers::pi, angle, 1e-9);
        EXPECT_EQ(std::get<Sphere>(scene.objects.front()).center, Point3(0, 0, 2000));
    }
}

TEST(TwoMirrorScene, NinetyDegreesGivesNormalsAt45) {
    const SceneConfig scene = noiseless_two_mirror(90, Sphere{Point3::Zero(), 115});
    for (const auto& m : scene.mirrors) {
        EXPECT_NEAR(std::acos(std::abs(m.rect.plane().c())) * 180 / std::numbers::pi, 45.0, 1e-9);
    }
}

TEST(TwoMirrorScene, RejectsDegenerateWedges) {
    EXPECT_THROW(make_two_mirror_scene(0, Sphere{Point3::Zero(), 115}, 2000), ConfigError);
    EXPECT_THROW(make_two_mirror_scene(180, Sphere{Point3::Zero(), 115}, 2000), ConfigError);
    EXPECT_THROW(make_two_mirror_scene(-10, Sphere{Point3::Zero(), 115}, 2000), ConfigError);
    TwoMirrorLayout tight;
    tight.mirror_distance_mm = 100;
    EXPECT_THROW(make_two_mirror_scene(120, Sphere{Point3::Zero(), 115}, 2000, tight), ConfigError);
}

TEST(SceneConfig, ValidationRejectsBadPrimitives) {
    SceneConfig scene;
    scene.objects.push_back(Sphere{{0, 0, 1000}, -1});
    EXPECT_THROW(render_depth(scene), ConfigError);
    scene.objects = {Sphere{{0, 0, -1000}, 10}};
    EXPECT_THROW(render_depth(scene), ConfigError);
    scene.objects = {Cylinder{{0, 0, 1000}, Vec3::Zero(), 10, 10}};
    EXPECT_THROW(render_depth(scene), ConfigError);
    scene.objects.clear();
    scene.noise_sigma_mm = -1;
    EXPECT_THROW(render_depth(scene), ConfigError);
}
