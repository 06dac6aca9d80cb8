#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mirror3d/errors.hpp"
#include "mirror3d/fitting.hpp"

using namespace mirror3d;

namespace {

double angle_deg(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(std::abs(a.normalized().dot(b.normalized())), 0.0, 1.0)) * 180 / std::numbers::pi;
}

Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0, 1);
    return Vec3(n(rng), n(rng), n(rng)).normalized();
}

// Camera-facing hemisphere of a sphere, like a depth sensor would see it.
std::vector<Point3> sphere_samples(const Point3& c, double r, int n, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> noise(0, sigma);
    std::vector<Point3> pts;
    while (static_cast<int>(pts.size()) < n) {
        Vec3 u = random_unit(rng);
        if (u.z() > 0) {
            u = -u;
        }
        pts.push_back(c + (r + (sigma > 0 ? noise(rng) : 0.0)) * u);
    }
    return pts;
}

std::vector<Point3> cylinder_samples(const Point3& a, const Vec3& dir, double r, double half, int n, double sigma,
                                     std::mt19937_64& rng) {
    std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
    std::uniform_real_distribution<double> along(-half, half);
    std::normal_distribution<double> noise(0, sigma);
    const Vec3 d = dir.normalized();
    const Vec3 u = d.unitOrthogonal();
    const Vec3 v = d.cross(u);
    std::vector<Point3> pts;
    for (int i = 0; i < n; ++i) {
        const double t = ang(rng);
        const double rr = r + (sigma > 0 ? noise(rng) : 0.0);
        pts.push_back(a + along(rng) * d + rr * (std::cos(t) * u + std::sin(t) * v));
    }
    return pts;
}

struct OracleSphere {
    Point3 center;
    double radius;
};

// Truncated least squares over a shrinking grid of centers; for a fixed
// center the best radius is the mean distance of the points within reach.
OracleSphere grid_search_sphere(std::span<const Point3> pts, Point3 center, double r_guess) {
    const double cut = 10.0;
    auto evaluate = [&](const Point3& c, double& radius) {
        radius = r_guess;
        for (int pass = 0; pass < 3; ++pass) {
            double sum = 0;
            int n = 0;
            for (const auto& p : pts) {
                const double d = (p - c).norm();
                if (std::abs(d - radius) < cut) {
                    sum += d;
                    ++n;
                }
            }
            if (n > 0) {
                radius = sum / n;
            }
        }
        double cost = 0;
        for (const auto& p : pts) {
            const double e = (p - c).norm() - radius;
            cost += std::min(e * e, cut * cut);
        }
        return cost;
    };
    double step = 8.0;
    double radius = r_guess;
    for (int level = 0; level < 4; ++level) {
        double best = std::numeric_limits<double>::infinity();
        Point3 best_c = center;
        for (int i = -6; i <= 6; ++i) {
            for (int j = -6; j <= 6; ++j) {
                for (int k = -6; k <= 6; ++k) {
                    const Point3 c = center + step * Point3(i, j, k);
                    double r = 0;
                    const double cost = evaluate(c, r);
                    if (cost < best) {
                        best = cost;
                        best_c = c;
                        radius = r;
                    }
                }
            }
        }
        center = best_c;
        step /= 4.0;
    }
    return {center, radius};
}

struct OracleCylinder {
    Vec3 dir;
    double radius;
};

// Least-squares circle (algebraic fit, then a few Gauss-Newton steps) of the
// points projected along `dir`; returns the geometric residual.
double circle_fit(std::span<const Point3> pts, const Vec3& dir, double& radius) {
    const Vec3 u = dir.unitOrthogonal();
    const Vec3 v = dir.cross(u);
    const int n = static_cast<int>(pts.size());
    Eigen::MatrixXd a(n, 3);
    Eigen::VectorXd b(n);
    std::vector<Eigen::Vector2d> q(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        q[static_cast<std::size_t>(i)] = {pts[static_cast<std::size_t>(i)].dot(u), pts[static_cast<std::size_t>(i)].dot(v)};
        const auto& p = q[static_cast<std::size_t>(i)];
        a.row(i) << p.x(), p.y(), 1;
        b(i) = -(p.squaredNorm());
    }
    const Eigen::Vector3d s = a.colPivHouseholderQr().solve(b);
    Eigen::Vector2d c(-s(0) / 2, -s(1) / 2);
    radius = std::sqrt(std::max(0.0, c.squaredNorm() - s(2)));
    for (int it = 0; it < 10; ++it) {
        Eigen::MatrixXd j(n, 3);
        Eigen::VectorXd r(n);
        for (int i = 0; i < n; ++i) {
            const Eigen::Vector2d d = q[static_cast<std::size_t>(i)] - c;
            const double len = d.norm();
            r(i) = len - radius;
            j.row(i) << -d.x() / len, -d.y() / len, -1;
        }
        const Eigen::Vector3d step = j.colPivHouseholderQr().solve(-r);
        c += step.head<2>();
        radius += step(2);
    }
    double cost = 0;
    for (const auto& p : q) {
        cost += std::pow((p - c).norm() - radius, 2);
    }
    return cost;
}

OracleCylinder grid_search_cylinder(std::span<const Point3> pts) {
    double span = std::numbers::pi / 2;
    double theta0 = span;
    double phi0 = 0;
    OracleCylinder best{Vec3::UnitZ(), 0};
    for (int level = 0; level < 4; ++level) {
        double best_cost = std::numeric_limits<double>::infinity();
        double bt = theta0;
        double bp = phi0;
        for (int i = -12; i <= 12; ++i) {
            for (int j = -12; j <= 12; ++j) {
                const double t = theta0 + span * i / 12.0;
                const double p = phi0 + span * j / 12.0;
                const Vec3 dir(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
                double r = 0;
                const double cost = circle_fit(pts, dir, r);
                if (cost < best_cost) {
                    best_cost = cost;
                    bt = t;
                    bp = p;
                    best = {dir, r};
                }
            }
        }
        theta0 = bt;
        phi0 = bp;
        span /= 8.0;
    }
    return best;
}

}  // namespace

TEST(FitSphere, ExactSamplesRecoveredForAnySeed) {
    std::mt19937_64 rng(31);
    const auto pts = sphere_samples({0, 0, 2000}, 115, 500, 0, rng);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RansacConfig cfg = RansacConfig::for_shapes();
        cfg.seed = seed;
        const SphereFit fit = fit_sphere_ransac(pts, cfg);
        EXPECT_LT((fit.center - Point3(0, 0, 2000)).norm(), 1e-6);
        EXPECT_NEAR(fit.radius, 115, 1e-6);
        EXPECT_EQ(fit.inlier_count, pts.size());
    }
}

TEST(FitSphere, NoisyWithOutliersMatchesGridOracle) {
    std::mt19937_64 rng(32);
    auto pts = sphere_samples({30, -20, 2000}, 115, 450, 5, rng);
    std::uniform_real_distribution<double> box(-300, 300);
    for (int i = 0; i < 50; ++i) {
        pts.push_back(Point3(30 + box(rng), -20 + box(rng), 2000 + box(rng)));
    }
    const SphereFit fit = fit_sphere_ransac(pts);
    EXPECT_NEAR(fit.radius, 115, 2.0);
    const OracleSphere oracle = grid_search_sphere(pts, fit.center + Point3(20, -15, 10), 110);
    EXPECT_NEAR(fit.radius, oracle.radius, 1.0);
    EXPECT_LT((fit.center - oracle.center).norm(), 2.0);
}

TEST(FitSphere, RejectsTooFewPoints) {
    const std::vector<Point3> pts{{0, 0, 1}, {1, 0, 1}, {0, 1, 1}};
    EXPECT_THROW(fit_sphere_ransac(pts), DegenerateInput);
}

TEST(FitSphere, PlanarDataHasNoConsensus) {
    std::vector<Point3> pts;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            pts.push_back(Point3(i * 10.0, j * 10.0, 1000));
        }
    }
    RansacConfig cfg = RansacConfig::for_shapes();
    cfg.iterations = 200;
    cfg.min_inlier_fraction = 0.9;
    EXPECT_THROW(fit_sphere_ransac(pts, cfg), NoConsensus);
}

TEST(EstimateNormals, PlanarPatchFacesCamera) {
    std::vector<Point3> pts;
    for (int i = 0; i < 15; ++i) {
        for (int j = 0; j < 15; ++j) {
            pts.push_back(Point3(i * 7.0 - 50, j * 7.0 - 50, 1000));
        }
    }
    for (const auto& n : estimate_normals(pts, 8)) {
        EXPECT_LT((n - Vec3(0, 0, -1)).norm(), 1e-6);
    }
}

TEST(EstimateNormals, SphereNormalsFollowSurface) {
    std::mt19937_64 rng(33);
    const Point3 c(0, 0, 2000);
    const auto pts = sphere_samples(c, 115, 2000, 0, rng);
    const auto normals = estimate_normals(pts, 20);
    // A lopsided 20-point patch spans ~40 mm on this sphere, so curvature
    // alone can tilt the plane by up to ~10 degrees; typical tilt is far less.
    std::vector<double> angles;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        // Near the silhouette the facing side is a coin toss, so orientation
        // is checked against the rule and direction up to sign.
        const Vec3 radial = (pts[i] - c) / 115;
        angles.push_back(std::acos(std::min(1.0, std::abs(normals[i].dot(radial)))) * 180 / std::numbers::pi);
        EXPECT_LT(angles.back(), 10.0);
        EXPECT_GE(normals[i].dot(-pts[i]), 0.0);
        EXPECT_NEAR(normals[i].norm(), 1.0, 1e-12);
    }
    std::nth_element(angles.begin(), angles.begin() + angles.size() / 2, angles.end());
    EXPECT_LT(angles[angles.size() / 2], 2.0);
}

TEST(EstimateNormals, RejectsBadNeighbourCounts) {
    std::vector<Point3> pts(10, Point3(0, 0, 1));
    EXPECT_THROW(estimate_normals(pts, 10), DegenerateInput);
    EXPECT_THROW(estimate_normals(pts, 2), DegenerateInput);
}

TEST(FitCylinder, ExactSamples) {
    std::mt19937_64 rng(34);
    const auto pts = cylinder_samples({0, 0, 2000}, {0, 1, 0}, 150, 250, 1000, 0, rng);
    const auto normals = estimate_normals(pts);
    const CylinderFit fit = fit_cylinder_ransac(pts, normals);
    EXPECT_LT(angle_deg(fit.axis_dir, {0, 1, 0}), 0.1);
    EXPECT_NEAR(fit.radius, 150, 0.1);
    EXPECT_NEAR(fit.axis_dir.norm(), 1.0, 1e-12);
    EXPECT_LT(distance_to_line({0, 0, 2000}, fit.axis_point, fit.axis_dir), 0.1);
}

TEST(FitCylinder, NoisyMatchesOrientationGridOracle) {
    std::mt19937_64 rng(35);
    const Vec3 dir = Vec3(0.2, 1, 0.1).normalized();
    const auto pts = cylinder_samples({20, 0, 2000}, dir, 150, 250, 1500, 5, rng);
    const CylinderFit fit = fit_cylinder_ransac(pts, estimate_normals(pts));
    EXPECT_NEAR(fit.radius, 150, 3.0);
    const OracleCylinder oracle = grid_search_cylinder(pts);
    EXPECT_LT(angle_deg(fit.axis_dir, oracle.dir), 1.0);
    EXPECT_NEAR(fit.radius, oracle.radius, 1.0);
}

TEST(FitCylinder, CoplanarPointsHaveNoConsensus) {
    std::vector<Point3> pts;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) {
            pts.push_back(Point3(i * 10.0, j * 10.0, 1000));
        }
    }
    RansacConfig cfg = RansacConfig::for_shapes();
    cfg.iterations = 200;
    EXPECT_THROW(fit_cylinder_ransac(pts, estimate_normals(pts, 8), cfg), NoConsensus);
}

TEST(FitCylinder, RejectsMismatchedInput) {
    const std::vector<Point3> pts{{0, 0, 1}};
    const std::vector<Vec3> normals{{0, 0, 1}};
    EXPECT_THROW(fit_cylinder_ransac(pts, normals), DegenerateInput);
    const std::vector<Point3> two{{0, 0, 1}, {1, 0, 1}};
    EXPECT_THROW(fit_cylinder_ransac(two, normals), DegenerateInput);
}

TEST(ErrorMetrics, HandExamples) {
    SphereFit s{{0, 0, 0}, 10, 0};
    EXPECT_EQ(error_sphere(std::vector<Point3>{{10, 0, 0}, {0, -10, 0}}, s).rmse, 0.0);
    const ErrorReport two = error_sphere(std::vector<Point3>{{12, 0, 0}, {0, 8, 0}}, s);
    EXPECT_DOUBLE_EQ(two.rmse, 2.0);
    EXPECT_DOUBLE_EQ(two.mean_error, 0.0);
    EXPECT_EQ(two.n_points, 2u);

    const CylinderFit c{{0, 0, 0}, {0, 0, 1}, 5, 0};
    std::vector<Point3> pts{{8, 0, 3}};
    for (int i = 0; i < 8; ++i) {
        const double t = i * 0.7;
        pts.push_back(Point3(5 * std::cos(t), 5 * std::sin(t), i));
    }
    const ErrorReport cyl = error_cylinder(pts, c);
    EXPECT_NEAR(cyl.rmse, 3 / std::sqrt(9.0), 1e-12);
    EXPECT_NEAR(cyl.mean_error, 3 / 9.0, 1e-12);

    EXPECT_THROW(error_sphere(std::vector<Point3>{}, s), EmptyCloud);
    EXPECT_THROW(error_cylinder(std::vector<Point3>{}, c), EmptyCloud);
}

TEST(ErrorMetrics, Properties) {
    std::mt19937_64 rng(36);
    std::normal_distribution<double> n(0, 1);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pts = sphere_samples({n(rng) * 100, n(rng) * 100, 1500}, 100, 60, 4, rng);
        const SphereFit fit{{n(rng) * 100, n(rng) * 100, 1500}, 100 + n(rng), 0};
        const ErrorReport base = error_sphere(pts, fit);

        double var = 0;
        for (const auto& p : pts) {
            const double e = (p - fit.center).norm() - fit.radius;
            var += (e - base.mean_error) * (e - base.mean_error);
        }
        var /= static_cast<double>(pts.size());
        EXPECT_NEAR(base.rmse * base.rmse, base.mean_error * base.mean_error + var, 1e-9 * (1 + var));

        const Eigen::Matrix3d r = Eigen::AngleAxisd(n(rng), random_unit(rng)).toRotationMatrix();
        const Vec3 t(n(rng) * 500, n(rng) * 500, n(rng) * 500);
        std::vector<Point3> moved;
        for (const auto& p : pts) {
            moved.push_back(r * p + t);
        }
        const ErrorReport m = error_sphere(moved, SphereFit{r * fit.center + t, fit.radius, 0});
        EXPECT_NEAR(m.rmse, base.rmse, 1e-9);
        EXPECT_NEAR(m.mean_error, base.mean_error, 1e-9);

        const CylinderFit cyl{fit.center, random_unit(rng), fit.radius, 0};
        const ErrorReport cb = error_cylinder(pts, cyl);
        const ErrorReport cm = error_cylinder(moved, CylinderFit{r * cyl.axis_point + t, r * cyl.axis_dir, cyl.radius, 0});
        EXPECT_NEAR(cm.rmse, cb.rmse, 1e-9);

        auto extended = pts;
        extended.push_back(fit.center + fit.radius * random_unit(rng));
        EXPECT_LE(error_sphere(extended, fit).rmse, base.rmse + 1e-12);
    }
}

TEST(DistanceToLine, Basic) {
    EXPECT_DOUBLE_EQ(distance_to_line({3, 4, 7}, {0, 0, 0}, {0, 0, 1}), 5.0);
    EXPECT_DOUBLE_EQ(distance_to_line({1, 1, 1}, {1, 1, -5}, {0, 0, 1}), 0.0);
}
