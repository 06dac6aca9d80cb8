#include "mirror3d/fitting.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "knn.hpp"
#include "mirror3d/errors.hpp"

namespace mirror3d {

namespace {

// |q - c|^2 = R^2 written as 2 q.c + (R^2 - |c|^2) = |q|^2, solved in
// coordinates relative to `anchor` for conditioning.
std::optional<SphereFit> algebraic_sphere(std::span<const Point3> points, const std::vector<std::size_t>& idx,
                                          const Point3& anchor) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixX4d a(n, 4);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Vec3 q = points[idx[static_cast<std::size_t>(r)]] - anchor;
        a.row(r) << 2.0 * q.x(), 2.0 * q.y(), 2.0 * q.z(), 1.0;
        b(r) = q.squaredNorm();
    }
    const Eigen::Vector4d x = a.colPivHouseholderQr().solve(b);
    const Vec3 c = x.head<3>();
    const double r2 = x(3) + c.squaredNorm();
    if (!x.allFinite() || !(r2 > 0.0)) {
        return std::nullopt;
    }
    return SphereFit{anchor + c, std::sqrt(r2), 0};
}

std::optional<SphereFit> sphere_through(const Point3& p0, const Point3& p1, const Point3& p2, const Point3& p3) {
    Eigen::Matrix3d a;
    Eigen::Vector3d b;
    const Vec3 q[3] = {p1 - p0, p2 - p0, p3 - p0};
    for (int i = 0; i < 3; ++i) {
        a.row(i) = 2.0 * q[i].transpose();
        b(i) = q[i].squaredNorm();
    }
    const double scale = q[0].norm() * q[1].norm() * q[2].norm();
    if (!(std::abs(a.determinant()) > 1e-9 * 8.0 * scale)) {
        return std::nullopt;  // coplanar sample
    }
    const Vec3 c = a.partialPivLu().solve(b);
    return SphereFit{p0 + c, c.norm(), 0};
}

std::vector<std::size_t> sphere_inliers(std::span<const Point3> points, const SphereFit& s, double threshold,
                                        double* residual = nullptr) {
    std::vector<std::size_t> inliers;
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dev = std::abs((points[i] - s.center).norm() - s.radius);
        if (dev < threshold) {
            inliers.push_back(i);
            sum += dev;
        }
    }
    if (residual != nullptr) {
        *residual = sum;
    }
    return inliers;
}

std::vector<std::size_t> cylinder_inliers(std::span<const Point3> points, const CylinderFit& c, double threshold,
                                          double* residual = nullptr) {
    std::vector<std::size_t> inliers;
    double sum = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const double dev = std::abs(distance_to_line(points[i], c.axis_point, c.axis_dir) - c.radius);
        if (dev < threshold) {
            inliers.push_back(i);
            sum += dev;
        }
    }
    if (residual != nullptr) {
        *residual = sum;
    }
    return inliers;
}

std::pair<Vec3, Vec3> orthonormal_basis(const Vec3& a) {
    const Vec3 seed = std::abs(a.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    const Vec3 u = a.cross(seed).normalized();
    return {u, a.cross(u)};
}

double cylinder_cost(std::span<const Point3> points, const std::vector<std::size_t>& idx, const CylinderFit& c) {
    double cost = 0.0;
    for (auto i : idx) {
        const double r = distance_to_line(points[i], c.axis_point, c.axis_dir) - c.radius;
        cost += r * r;
    }
    return cost;
}

Point3 centroid_of(std::span<const Point3> points, const std::vector<std::size_t>& idx) {
    Point3 m = Point3::Zero();
    for (auto i : idx) {
        m += points[i];
    }
    return m / static_cast<double>(idx.size());
}

// Axis from the normals (direction least represented among them) and a
// circle fit of the points projected along that axis.
std::optional<CylinderFit> cylinder_from_normals(std::span<const Point3> points, std::span<const Vec3> normals,
                                                 const std::vector<std::size_t>& idx) {
    Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
    for (auto i : idx) {
        scatter += normals[i] * normals[i].transpose();
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(scatter);
    const Vec3 axis = eig.eigenvectors().col(0).normalized();
    const auto [u, v] = orthonormal_basis(axis);
    const Point3 m = centroid_of(points, idx);

    const auto n = static_cast<Eigen::Index>(idx.size());
    Eigen::MatrixX3d a(n, 3);
    Eigen::VectorXd b(n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const Vec3 q = points[idx[static_cast<std::size_t>(r)]] - m;
        const double x = q.dot(u);
        const double y = q.dot(v);
        a.row(r) << 2.0 * x, 2.0 * y, 1.0;
        b(r) = x * x + y * y;
    }
    const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
    const double r2 = sol(2) + sol(0) * sol(0) + sol(1) * sol(1);
    if (!sol.allFinite() || !(r2 > 0.0)) {
        return std::nullopt;
    }
    return CylinderFit{m + sol(0) * u + sol(1) * v, axis, std::sqrt(r2), 0};
}

// Levenberg-Marquardt on sum (dist(P, axis) - R)^2 over axis direction (2),
// axis position (2) and radius.
CylinderFit refine_cylinder(std::span<const Point3> points, const std::vector<std::size_t>& idx, CylinderFit c) {
    const auto n = static_cast<Eigen::Index>(idx.size());
    const Point3 m = centroid_of(points, idx);
    double lambda = 1e-3;
    double cost = cylinder_cost(points, idx, c);
    for (int iter = 0; iter < 50; ++iter) {
        const auto [u, v] = orthonormal_basis(c.axis_dir);
        Eigen::MatrixXd jac(n, 5);
        Eigen::VectorXd res(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const Vec3 w = points[idx[static_cast<std::size_t>(r)]] - c.axis_point;
            const double wa = w.dot(c.axis_dir);
            const Vec3 perp = w - wa * c.axis_dir;
            const double d = perp.norm();
            const Vec3 e = d > 0.0 ? Vec3(perp / d) : Vec3::Zero();
            res(r) = d - c.radius;
            jac(r, 0) = -wa * e.dot(u);
            jac(r, 1) = -wa * e.dot(v);
            jac(r, 2) = -e.dot(u);
            jac(r, 3) = -e.dot(v);
            jac(r, 4) = -1.0;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * res;
        bool accepted = false;
        for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            CylinderFit trial = c;
            trial.axis_dir = (c.axis_dir + step(0) * u + step(1) * v).normalized();
            trial.axis_point = c.axis_point + step(2) * u + step(3) * v;
            trial.axis_point += (m - trial.axis_point).dot(trial.axis_dir) * trial.axis_dir;
            trial.radius = c.radius + step(4);
            const double trial_cost = cylinder_cost(points, idx, trial);
            if (step.allFinite() && trial_cost < cost) {
                const double gain = cost - trial_cost;
                c = trial;
                cost = trial_cost;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (gain <= 1e-14 * (1.0 + cost)) {
                    return c;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) {
            break;
        }
    }
    return c;
}

ErrorReport summarize(const std::vector<double>& deviations) {
    if (deviations.empty()) {
        throw EmptyCloud("cannot evaluate fitting error on an empty cloud");
    }
    double sum = 0.0;
    double sum_sq = 0.0;
    for (double d : deviations) {
        sum += d;
        sum_sq += d * d;
    }
    const auto n = static_cast<double>(deviations.size());
    return {std::sqrt(sum_sq / n), sum / n, deviations.size()};
}

}  // namespace

SphereFit fit_sphere_ransac(std::span<const Point3> points, const RansacConfig& cfg) {
    cfg.validate();
    const std::size_t n = points.size();
    if (n < 4) {
        throw DegenerateInput("sphere fit needs at least 4 points, got " + std::to_string(n));
    }
    const std::size_t needed = cfg.required_inliers(n, 4);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> best_inliers;
    double best_residual = 0.0;
    for (int it = 0; it < cfg.iterations; ++it) {
        const std::size_t s[4] = {pick(rng), pick(rng), pick(rng), pick(rng)};
        if (s[0] == s[1] || s[0] == s[2] || s[0] == s[3] || s[1] == s[2] || s[1] == s[3] || s[2] == s[3]) {
            continue;
        }
        const auto hypothesis = sphere_through(points[s[0]], points[s[1]], points[s[2]], points[s[3]]);
        if (!hypothesis) {
            continue;
        }
        double residual = 0.0;
        auto inliers = sphere_inliers(points, *hypothesis, cfg.inlier_threshold_mm, &residual);
        if (inliers.size() > best_inliers.size() ||
            (inliers.size() == best_inliers.size() && residual < best_residual)) {
            best_inliers = std::move(inliers);
            best_residual = residual;
        }
    }
    if (best_inliers.size() < needed) {
        throw NoConsensus("sphere RANSAC: best consensus " + std::to_string(best_inliers.size()) +
                          " < required " + std::to_string(needed));
    }
    auto refined = algebraic_sphere(points, best_inliers, centroid_of(points, best_inliers));
    if (!refined) {
        throw NoConsensus("sphere RANSAC: refinement on the consensus set failed");
    }
    refined->inlier_count = sphere_inliers(points, *refined, cfg.inlier_threshold_mm).size();
    return *refined;
}

std::vector<Vec3> estimate_normals(std::span<const Point3> points, std::size_t k_neighbors) {
    if (k_neighbors < 3 || k_neighbors >= points.size()) {
        throw DegenerateInput("normal estimation needs 3 <= k < cloud size (k=" + std::to_string(k_neighbors) +
                              ", n=" + std::to_string(points.size()) + ")");
    }
    const detail::KdTree tree(points);
    std::vector<Vec3> normals;
    normals.reserve(points.size());
    for (const auto& p : points) {
        const auto idx = tree.nearest(p, k_neighbors);
        // Centered covariance: the homogeneous fit loses the normal on
        // patches a few cm wide seen from metres away.
        Point3 mean = Point3::Zero();
        for (auto i : idx) {
            mean += points[i];
        }
        mean /= static_cast<double>(idx.size());
        Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
        for (auto i : idx) {
            const Vec3 q = points[i] - mean;
            cov += q * q.transpose();
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
        Vec3 n = eig.eigenvectors().col(0).normalized();
        if (n.dot(-p) < 0.0) {
            n = -n;
        }
        normals.push_back(n);
    }
    return normals;
}

CylinderFit fit_cylinder_ransac(std::span<const Point3> points, std::span<const Vec3> normals,
                                const RansacConfig& cfg) {
    cfg.validate();
    const std::size_t n = points.size();
    if (n < 2) {
        throw DegenerateInput("cylinder fit needs at least 2 points, got " + std::to_string(n));
    }
    if (normals.size() != n) {
        throw DegenerateInput("cylinder fit needs one normal per point");
    }
    const std::size_t needed = cfg.required_inliers(n, 2);

    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> best_inliers;
    CylinderFit best;
    double best_residual = 0.0;
    for (int it = 0; it < cfg.iterations; ++it) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        if (i == j) {
            continue;
        }
        const Vec3& n1 = normals[i];
        const Vec3& n2 = normals[j];
        const Vec3 cross = n1.cross(n2);
        if (cross.norm() < 1e-3) {
            continue;  // near-parallel normals do not determine an axis
        }
        const Vec3 w0 = points[i] - points[j];
        const double b = n1.dot(n2);
        const double d = n1.dot(w0);
        const double e = n2.dot(w0);
        const double denom = 1.0 - b * b;
        const Point3 c1 = points[i] + ((b * e - d) / denom) * n1;
        const Point3 c2 = points[j] + ((e - b * d) / denom) * n2;

        CylinderFit hypothesis;
        hypothesis.axis_dir = cross.normalized();
        hypothesis.axis_point = 0.5 * (c1 + c2);
        hypothesis.radius = 0.5 * (distance_to_line(points[i], hypothesis.axis_point, hypothesis.axis_dir) +
                                   distance_to_line(points[j], hypothesis.axis_point, hypothesis.axis_dir));
        if (!(hypothesis.radius > 0.0) || !hypothesis.axis_point.allFinite()) {
            continue;
        }
        double residual = 0.0;
        auto inliers = cylinder_inliers(points, hypothesis, cfg.inlier_threshold_mm, &residual);
        if (inliers.size() > best_inliers.size() ||
            (inliers.size() == best_inliers.size() && residual < best_residual)) {
            best_inliers = std::move(inliers);
            best_residual = residual;
            best = hypothesis;
        }
    }
    if (best_inliers.size() < needed) {
        throw NoConsensus("cylinder RANSAC: best consensus " + std::to_string(best_inliers.size()) +
                          " < required " + std::to_string(needed));
    }

    CylinderFit fit = best;
    std::vector<std::size_t> inliers = best_inliers;
    for (int round = 0; round < 3; ++round) {
        if (const auto from_normals = cylinder_from_normals(points, normals, inliers);
            from_normals && cylinder_cost(points, inliers, *from_normals) < cylinder_cost(points, inliers, fit)) {
            fit = *from_normals;
        }
        fit = refine_cylinder(points, inliers, fit);
        auto next = cylinder_inliers(points, fit, cfg.inlier_threshold_mm);
        if (next.size() < 3) {
            break;
        }
        inliers = std::move(next);
    }

    double mean_radius = 0.0;
    for (auto i : inliers) {
        mean_radius += distance_to_line(points[i], fit.axis_point, fit.axis_dir);
    }
    fit.radius = mean_radius / static_cast<double>(inliers.size());
    fit.inlier_count = cylinder_inliers(points, fit, cfg.inlier_threshold_mm).size();
    return fit;
}

double distance_to_line(const Point3& p, const Point3& line_point, const Vec3& unit_dir) {
    const Vec3 w = p - line_point;
    return (w - w.dot(unit_dir) * unit_dir).norm();
}

ErrorReport error_sphere(std::span<const Point3> points, const SphereFit& fit) {
    std::vector<double> dev;
    dev.reserve(points.size());
    for (const auto& p : points) {
        dev.push_back((p - fit.center).norm() - fit.radius);
    }
    return summarize(dev);
}

ErrorReport error_cylinder(std::span<const Point3> points, const CylinderFit& fit) {
    std::vector<double> dev;
    dev.reserve(points.size());
    for (const auto& p : points) {
        dev.push_back(distance_to_line(p, fit.axis_point, fit.axis_dir) - fit.radius);
    }
    return summarize(dev);
}

}  // namespace mirror3d
