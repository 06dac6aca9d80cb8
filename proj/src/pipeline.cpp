#include "mirror3d/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "mirror3d/errors.hpp"
#include "mirror3d/io.hpp"

namespace mirror3d {

namespace {

using config::Json;

constexpr std::uint64_t kCalibrationSeedSalt = 0x6d61726b657273ULL;  // "markers"

template <class T>
T field(const Json& j, const char* key, T fallback) {
    if (!j.is_object() || !j.contains(key)) {
        return fallback;
    }
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError(std::string("config field '") + key + "' has the wrong type");
    }
}

const Json& section(const Json& j, const char* key) {
    static const Json kNull;
    return j.contains(key) ? j.at(key) : kNull;
}

CameraIntrinsics camera_of(const config::Document& doc) {
    return config::parse_camera(doc.has("camera") ? doc.at("camera") : Json::object());
}

std::vector<Mirror> mirrors_of(const config::Document& doc) {
    if (doc.has("mirrors")) {
        return config::parse_mirrors(doc.at("mirrors"));
    }
    if (doc.has("mirrors_file")) {
        const auto sidecar = config::load(doc.resolve(doc.at("mirrors_file").get<std::string>()));
        return config::parse_mirrors(sidecar.at("mirrors"));
    }
    throw ConfigError("config needs either 'mirrors' or 'mirrors_file'");
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

const char* variable_name(SweepVariable v) {
    return v == SweepVariable::mirror_angle_deg ? "mirror_angle_deg" : "object_distance_mm";
}

}  // namespace

const char* to_string(Algorithm a) {
    return a == Algorithm::raw ? "raw" : "carved";
}

Algorithm parse_algorithm(const std::string& s) {
    if (s == "raw") {
        return Algorithm::raw;
    }
    if (s == "carved" || s == "carve") {
        return Algorithm::carved;
    }
    throw ConfigError("unknown algorithm '" + s + "' (expected raw or carved)");
}

ShapeKind parse_shape(const std::string& s) {
    if (s == "sphere") {
        return ShapeKind::sphere;
    }
    if (s == "cylinder") {
        return ShapeKind::cylinder;
    }
    throw ConfigError("unknown shape '" + s + "' (expected sphere or cylinder)");
}

ShapeKind ExperimentConfig::shape() const {
    if (std::holds_alternative<Sphere>(object)) {
        return ShapeKind::sphere;
    }
    if (std::holds_alternative<Cylinder>(object)) {
        return ShapeKind::cylinder;
    }
    throw ConfigError("experiments need a sphere or cylinder object");
}

SceneConfig calibration_scene(const SceneConfig& scene, std::uint64_t seed) {
    SceneConfig calib = scene;
    calib.objects.clear();
    calib.render_markers = true;
    calib.seed = seed ^ kCalibrationSeedSalt;

    double far_z = 0.0;
    for (const auto& m : scene.mirrors) {
        for (const auto& c : m.rect.corners()) {
            far_z = std::max(far_z, c.z());
        }
    }
    const double wall_z = far_z + 500.0;
    const auto& k = scene.intrinsics;
    const double half_w = 1.5 * wall_z * std::max(k.cx, k.width - k.cx) / k.fx;
    const double half_h = 1.5 * wall_z * std::max(k.cy, k.height - k.cy) / k.fy;
    calib.objects.push_back(PlanarPatch{Rect3{{-half_w, -half_h, wall_z}, {2.0 * half_w, 0.0, 0.0},
                                              {0.0, 2.0 * half_h, 0.0}}});
    return calib;
}

std::vector<Pixel> calibration_pixels(const SceneConfig& scene, const RenderOutput& calibration, std::size_t j,
                                      int outliers) {
    std::vector<Pixel> pixels = calibration.marker_pixels.at(j);
    const Rect3& rect = scene.mirrors.at(j).rect;
    for (int o = 0; o < outliers; ++o) {
        // Just beyond the mirror's far edge: the camera sees the wall there.
        const double s = outliers == 1 ? 0.5 : 0.2 + 0.6 * o / (outliers - 1);
        pixels.push_back(project(rect.at(s, 1.15), scene.intrinsics));
    }
    return pixels;
}

ExperimentScene prepare_experiment(const ExperimentConfig& cfg, std::uint64_t seed) {
    TwoMirrorLayout layout;
    layout.intrinsics = cfg.intrinsics;
    layout.mirror_distance_mm = cfg.mirror_distance_mm;
    layout.noise_sigma_mm = cfg.noise_sigma_mm;
    layout.seed = seed;
    layout.markers_per_mirror = std::max(0, cfg.markers_per_mirror - cfg.marker_outliers);

    ExperimentScene out;
    out.seed = seed;
    out.scene = make_two_mirror_scene(cfg.mirror_angle_deg, cfg.object, cfg.camera_distance_mm, layout);
    out.render = render_depth(out.scene);

    if (!cfg.calibrate_planes) {
        for (std::size_t j = 0; j < out.scene.mirrors.size(); ++j) {
            out.mirrors.emplace_back(out.render.truth_planes[j], out.render.mirror_regions[j]);
        }
        return out;
    }
    const SceneConfig calib = calibration_scene(out.scene, seed);
    const RenderOutput calib_frame = render_depth(calib);
    RansacConfig ransac = cfg.plane_ransac;
    ransac.seed = seed;
    for (std::size_t j = 0; j < out.scene.mirrors.size(); ++j) {
        const auto pixels = calibration_pixels(calib, calib_frame, j, cfg.marker_outliers);
        out.mirrors.push_back(calibrate_mirror(calib_frame.depth, pixels, out.render.mirror_regions[j],
                                               out.scene.intrinsics, ransac));
    }
    return out;
}

VoxelGrid volume_around(const LabeledCloud& cloud, double voxel_size_mm, double padding_mm) {
    if (cloud.empty()) {
        throw EmptyCloud("cannot size a carving volume from an empty cloud");
    }
    Point3 lo = cloud.points.front();
    Point3 hi = lo;
    for (const auto& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    lo -= Vec3::Constant(padding_mm);
    hi += Vec3::Constant(padding_mm);
    std::array<int, 3> dims{};
    for (int i = 0; i < 3; ++i) {
        dims[static_cast<std::size_t>(i)] = std::max(1, static_cast<int>(std::ceil((hi(i) - lo(i)) / voxel_size_mm)));
    }
    return VoxelGrid(lo, voxel_size_mm, dims, true);
}

LabeledCloud reconstruct(const ExperimentConfig& cfg, const ExperimentScene& scene, Algorithm algorithm) {
    const auto& k = scene.scene.intrinsics;
    LabeledCloud raw = reconstruct_raw(scene.render.depth, {}, k, scene.mirrors);
    if (algorithm == Algorithm::raw) {
        return raw;
    }
    const VoxelGrid init = volume_around(raw, cfg.voxel_size_mm, 2.0 * cfg.voxel_size_mm + cfg.carve.threshold_mm);
    return extract_cloud(carve(init, scene.render.depth, {}, k, scene.mirrors, cfg.carve));
}

ShapeScore fit_and_score(const LabeledCloud& cloud, ShapeKind shape, const RansacConfig& ransac,
                         std::size_t normals_k) {
    if (shape == ShapeKind::sphere) {
        const SphereFit fit = fit_sphere_ransac(cloud.points, ransac);
        return {error_sphere(cloud.points, fit), fit.radius};
    }
    const auto normals = estimate_normals(cloud.points, normals_k);
    const CylinderFit fit = fit_cylinder_ransac(cloud.points, normals, ransac);
    return {error_cylinder(cloud.points, fit), fit.radius};
}

ExperimentRun run_experiment(const ExperimentConfig& cfg, const ExperimentScene& scene, Algorithm algorithm) {
    const LabeledCloud cloud = reconstruct(cfg, scene, algorithm);
    RansacConfig ransac = cfg.shape_ransac;
    ransac.seed = scene.seed;
    const ShapeScore score = fit_and_score(cloud, cfg.shape(), ransac, cfg.normals_k);
    return {algorithm, score.error, score.radius_mm, cloud.size(), scene.seed};
}

void SweepSpec::validate() const {
    if (values.empty()) {
        throw ConfigError("sweep needs at least one value");
    }
    if (repetitions < 1) {
        throw ConfigError("sweep repetitions must be >= 1");
    }
    if (algorithms.empty()) {
        throw ConfigError("sweep needs at least one algorithm");
    }
}

std::string run_sweep(const SweepSpec& spec, const ExperimentConfig& base, std::uint64_t seed,
                      std::ostream* summary) {
    spec.validate();
    std::ostringstream csv;
    csv << variable_name(spec.variable) << ",algorithm,rmse_mm,mean_error_mm,fitted_radius_mm,n_points,seed\n";

    std::map<std::pair<std::size_t, int>, std::pair<double, int>> totals;
    for (std::size_t v = 0; v < spec.values.size(); ++v) {
        ExperimentConfig cfg = base;
        if (spec.variable == SweepVariable::mirror_angle_deg) {
            cfg.mirror_angle_deg = spec.values[v];
        } else {
            cfg.mirror_distance_mm = spec.values[v];
        }
        for (int rep = 0; rep < spec.repetitions; ++rep) {
            const std::uint64_t run_seed = seed + v * static_cast<std::uint64_t>(spec.repetitions) +
                                           static_cast<std::uint64_t>(rep);
            const ExperimentScene scene = prepare_experiment(cfg, run_seed);
            for (const Algorithm alg : spec.algorithms) {
                const ExperimentRun run = run_experiment(cfg, scene, alg);
                csv << format_double(spec.values[v]) << ',' << to_string(alg) << ','
                    << format_double(run.error.rmse) << ',' << format_double(run.error.mean_error) << ','
                    << format_double(run.fitted_radius_mm) << ',' << run.n_points << ',' << run.seed << '\n';
                auto& t = totals[{v, static_cast<int>(alg)}];
                t.first += spec.metric == SweepMetric::rmse ? run.error.rmse : run.error.mean_error;
                t.second += 1;
            }
        }
    }
    if (summary != nullptr) {
        const char* metric = spec.metric == SweepMetric::rmse ? "rmse_mm" : "mean_error_mm";
        for (const auto& [key, total] : totals) {
            *summary << variable_name(spec.variable) << '=' << format_double(spec.values[key.first]) << ' '
                     << to_string(static_cast<Algorithm>(key.second)) << " mean " << metric << '='
                     << format_double(total.first / total.second) << '\n';
        }
    }
    return csv.str();
}

SweepSpec parse_sweep(const Json& j) {
    SweepSpec spec;
    const auto variable = field<std::string>(j, "variable", "mirror_angle_deg");
    if (variable == "mirror_angle_deg") {
        spec.variable = SweepVariable::mirror_angle_deg;
    } else if (variable == "object_distance_mm") {
        spec.variable = SweepVariable::object_distance_mm;
    } else {
        throw ConfigError("unknown sweep variable '" + variable + "'");
    }
    spec.values = field<std::vector<double>>(j, "values", {});
    spec.repetitions = field(j, "repetitions", 1);
    const auto metric = field<std::string>(j, "metric", "rmse");
    if (metric == "rmse") {
        spec.metric = SweepMetric::rmse;
    } else if (metric == "mean_error") {
        spec.metric = SweepMetric::mean_error;
    } else {
        throw ConfigError("unknown sweep metric '" + metric + "'");
    }
    if (j.contains("algorithm") || j.contains("algorithms")) {
        const Json& a = j.contains("algorithms") ? j.at("algorithms") : j.at("algorithm");
        spec.algorithms.clear();
        if (a.is_string()) {
            spec.algorithms.push_back(parse_algorithm(a.get<std::string>()));
        } else if (a.is_array()) {
            for (const auto& s : a) {
                if (!s.is_string()) {
                    throw ConfigError("sweep algorithms must be strings");
                }
                spec.algorithms.push_back(parse_algorithm(s.get<std::string>()));
            }
        } else {
            throw ConfigError("sweep algorithm must be a string or an array of strings");
        }
    }
    spec.validate();
    return spec;
}

ExperimentConfig parse_experiment(const Json& j, const CameraIntrinsics& k) {
    ExperimentConfig cfg;
    cfg.intrinsics = k;
    if (j.is_null()) {
        return cfg;
    }
    if (j.contains("object")) {
        cfg.object = config::parse_primitive(j.at("object"));
    }
    cfg.camera_distance_mm = field(j, "camera_distance_mm", cfg.camera_distance_mm);
    cfg.mirror_angle_deg = field(j, "mirror_angle_deg", cfg.mirror_angle_deg);
    cfg.mirror_distance_mm = field(j, "mirror_distance_mm", cfg.mirror_distance_mm);
    cfg.noise_sigma_mm = field(j, "noise_sigma_mm", cfg.noise_sigma_mm);
    const auto planes = field<std::string>(j, "planes", "calibrated");
    if (planes != "calibrated" && planes != "truth") {
        throw ConfigError("planes must be 'calibrated' or 'truth'");
    }
    cfg.calibrate_planes = planes == "calibrated";
    cfg.markers_per_mirror = field(j, "markers_per_mirror", cfg.markers_per_mirror);
    cfg.marker_outliers = field(j, "marker_outliers", cfg.marker_outliers);
    if (cfg.marker_outliers < 0 || cfg.markers_per_mirror - cfg.marker_outliers < 3) {
        throw ConfigError("calibration needs at least 3 genuine markers per mirror");
    }
    cfg.plane_ransac = config::parse_ransac(section(j, "plane_ransac"), cfg.plane_ransac);
    cfg.shape_ransac = config::parse_ransac(section(j, "shape_ransac"), cfg.shape_ransac);
    cfg.carve = config::parse_carve(section(j, "carve"));
    cfg.voxel_size_mm = field(j, "voxel_size_mm", cfg.voxel_size_mm);
    if (!(cfg.voxel_size_mm > 0.0)) {
        throw ConfigError("voxel_size_mm must be positive");
    }
    cfg.normals_k = field(j, "normals_k", cfg.normals_k);
    cfg.shape();
    return cfg;
}

RenderFiles cmd_render(const config::Document& doc, const std::filesystem::path& out,
                       std::optional<std::uint64_t> seed) {
    const CameraIntrinsics k = camera_of(doc);
    Json scene_json = doc.at("scene");
    if (seed) {
        scene_json["seed"] = *seed;
    }
    const SceneConfig scene = config::parse_scene(scene_json, k);
    const RenderOutput render = render_depth(scene);

    RenderFiles files;
    files.depth = out;
    auto sidecar = [&](const char* suffix) {
        auto p = out;
        p.replace_extension(suffix);
        return p;
    };
    files.mirrors = sidecar(".mirrors.json");
    files.truth = sidecar(".truth.json");

    write_pgm(files.depth, render.depth);

    Json mirrors = Json::array();
    for (std::size_t j = 0; j < scene.mirrors.size(); ++j) {
        mirrors.push_back({{"plane", config::to_json(render.truth_planes[j])},
                           {"region", config::to_json(render.mirror_regions[j])},
                           {"markers", config::to_json(render.marker_pixels[j])}});
    }
    config::write(files.mirrors, {{"schema_version", config::kSchemaVersion},
                                  {"camera", config::to_json(k)},
                                  {"depth", files.depth.filename().string()},
                                  {"mirrors", mirrors}});

    std::map<int, std::size_t> label_counts;
    for (int label : render.truth_labels) {
        ++label_counts[label];
    }
    Json counts = Json::object();
    for (const auto& [label, n] : label_counts) {
        counts[std::to_string(label)] = n;
    }
    Json objects = Json::array();
    for (const auto& o : scene.objects) {
        objects.push_back(config::to_json(o));
    }
    Json truth = {{"schema_version", config::kSchemaVersion},
                  {"camera", config::to_json(k)},
                  {"objects", objects},
                  {"truth_planes", Json::array()},
                  {"noise_sigma_mm", scene.noise_sigma_mm},
                  {"seed", scene.seed},
                  {"label_counts", counts}};
    for (const auto& p : render.truth_planes) {
        truth["truth_planes"].push_back(config::to_json(p));
    }
    if (scene.mirror_angle_deg) {
        truth["mirror_angle_deg"] = *scene.mirror_angle_deg;
    }
    config::write(files.truth, truth);
    return files;
}

std::vector<Mirror> cmd_calibrate(const config::Document& doc, const std::filesystem::path& out,
                                  std::optional<std::uint64_t> seed) {
    const CameraIntrinsics k = camera_of(doc);
    const DepthImage depth = read_pgm(doc.resolve(doc.at("depth").get<std::string>()));
    if (depth.width() != k.width || depth.height() != k.height) {
        throw ConfigError("depth image size does not match the camera intrinsics");
    }
    RansacConfig ransac = config::parse_ransac(section(doc.json, "ransac"), RansacConfig::for_planes());
    if (seed) {
        ransac.seed = *seed;
    }
    const Json& entries = doc.at("mirrors");
    if (!entries.is_array()) {
        throw ConfigError("mirrors must be an array");
    }
    std::vector<Mirror> mirrors;
    for (const auto& entry : entries) {
        if (!entry.contains("markers") || !entry.contains("region")) {
            throw ConfigError("each mirror to calibrate needs 'markers' and 'region'");
        }
        const auto markers = config::parse_pixels(entry.at("markers"));
        mirrors.push_back(calibrate_mirror(depth, markers, config::parse_polygon(entry.at("region")), k, ransac));
    }
    config::write(out, {{"schema_version", config::kSchemaVersion},
                        {"camera", config::to_json(k)},
                        {"mirrors", config::to_json(mirrors)}});
    return mirrors;
}

std::size_t cmd_reconstruct(const config::Document& doc, Algorithm mode, const std::filesystem::path& out) {
    const CameraIntrinsics k = camera_of(doc);
    const DepthImage depth = read_pgm(doc.resolve(doc.at("depth").get<std::string>()));
    const std::vector<Mirror> mirrors = mirrors_of(doc);

    PixelMask mask;
    if (doc.has("mask")) {
        auto region = std::make_shared<PixelPolygon>(config::parse_polygon(doc.at("mask")));
        mask = [region](int col, int row) {
            return point_in_polygon({static_cast<double>(col), static_cast<double>(row)}, *region);
        };
    }

    LabeledCloud cloud = reconstruct_raw(depth, mask, k, mirrors);
    if (mode == Algorithm::carved) {
        const Json& carve_json = section(doc.json, "carve");
        const CarveConfig cfg = config::parse_carve(carve_json);
        const double voxel = field(carve_json, "voxel_size_mm", 10.0);
        if (!(voxel > 0.0)) {
            throw ConfigError("voxel_size_mm must be positive");
        }
        VoxelGrid init;
        if (carve_json.is_object() && carve_json.contains("volume")) {
            const Json& v = carve_json.at("volume");
            init = VoxelGrid(config::parse_point(v.at("origin"), "volume origin"), voxel,
                             field<std::array<int, 3>>(v, "dims", {0, 0, 0}), true);
        } else {
            init = volume_around(cloud, voxel, 2.0 * voxel + cfg.threshold_mm);
        }
        cloud = extract_cloud(carve(init, depth, mask, k, mirrors, cfg));
    }
    write_ply(out, cloud);
    return cloud.size();
}

Json cmd_fit(const config::Document& doc, ShapeKind shape, const std::filesystem::path& out,
             std::optional<std::uint64_t> seed, const std::optional<std::filesystem::path>& input) {
    const auto cloud_path = input ? *input : doc.resolve(doc.at("cloud").get<std::string>());
    const LabeledCloud cloud = read_ply(cloud_path);
    RansacConfig ransac = config::parse_ransac(section(doc.json, "ransac"), RansacConfig::for_shapes());
    if (seed) {
        ransac.seed = *seed;
    }
    Json report = {{"schema_version", config::kSchemaVersion}};
    ErrorReport error;
    if (shape == ShapeKind::sphere) {
        const SphereFit fit = fit_sphere_ransac(cloud.points, ransac);
        error = error_sphere(cloud.points, fit);
        report["shape"] = "sphere";
        report["center"] = config::to_json(fit.center);
        report["radius_mm"] = fit.radius;
        report["inlier_count"] = fit.inlier_count;
    } else {
        const auto normals = estimate_normals(cloud.points, field<std::size_t>(doc.json, "normals_k", 20));
        const CylinderFit fit = fit_cylinder_ransac(cloud.points, normals, ransac);
        error = error_cylinder(cloud.points, fit);
        report["shape"] = "cylinder";
        report["axis_point"] = config::to_json(fit.axis_point);
        report["axis_dir"] = config::to_json(fit.axis_dir);
        report["radius_mm"] = fit.radius;
        report["inlier_count"] = fit.inlier_count;
    }
    report["rmse_mm"] = error.rmse;
    report["mean_error_mm"] = error.mean_error;
    report["n_points"] = error.n_points;
    if (!out.empty()) {
        config::write(out, report);
    }
    return report;
}

std::string cmd_sweep(const config::Document& doc, const std::filesystem::path& out,
                      std::optional<std::uint64_t> seed, std::ostream* summary) {
    const CameraIntrinsics k = camera_of(doc);
    const SweepSpec spec = parse_sweep(doc.at("sweep"));
    const ExperimentConfig base = parse_experiment(section(doc.json, "experiment"), k);
    const std::uint64_t base_seed = seed ? *seed : field<std::uint64_t>(doc.json, "seed", 0);
    const std::string csv = run_sweep(spec, base, base_seed, summary);
    std::ofstream file(out, std::ios::binary);
    if (!file) {
        throw IoError("cannot open '" + out.string() + "' for writing");
    }
    file << csv;
    if (!file) {
        throw IoError("failed writing '" + out.string() + "'");
    }
    return csv;
}

}  // namespace mirror3d
