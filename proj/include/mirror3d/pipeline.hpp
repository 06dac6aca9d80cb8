#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mirror3d/calibration.hpp"
#include "mirror3d/config.hpp"
#include "mirror3d/fitting.hpp"
#include "mirror3d/reconstruction.hpp"
#include "mirror3d/synthetic.hpp"

namespace mirror3d {

enum class Algorithm { raw, carved };
enum class ShapeKind { sphere, cylinder };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& s);
ShapeKind parse_shape(const std::string& s);

/// One synthetic two-mirror measurement: scene layout, sensor noise, how the
/// mirror planes are obtained, and the reconstruction/fitting parameters.
struct ExperimentConfig {
    Primitive object = Sphere{Point3::Zero(), 115.0};
    double camera_distance_mm = 2000.0;
    double mirror_angle_deg = 120.0;
    /// Object center to each mirror plane; 0 selects the layout default.
    double mirror_distance_mm = 0.0;
    CameraIntrinsics intrinsics;
    double noise_sigma_mm = 5.0;

    /// Calibrate the planes from rendered markers instead of using the
    /// ground-truth planes.
    bool calibrate_planes = true;
    /// Marker pixels per mirror, including the deliberately wrong ones.
    int markers_per_mirror = 8;
    int marker_outliers = 2;
    RansacConfig plane_ransac = RansacConfig::for_planes();

    CarveConfig carve;
    double voxel_size_mm = 10.0;

    RansacConfig shape_ransac = RansacConfig::for_shapes();
    std::size_t normals_k = 20;

    ShapeKind shape() const;
};

/// A rendered object frame plus the mirrors used to reconstruct it.
struct ExperimentScene {
    SceneConfig scene;
    RenderOutput render;
    std::vector<Mirror> mirrors;
    std::uint64_t seed = 0;
};

struct ExperimentRun {
    Algorithm algorithm = Algorithm::raw;
    ErrorReport error;
    double fitted_radius_mm = 0.0;
    std::size_t n_points = 0;
    std::uint64_t seed = 0;
};

/// Renders the object frame; with calibrate_planes, also renders a marker
/// frame (object removed, back wall added) and calibrates each mirror from
/// its marker pixels plus `marker_outliers` pixels just off the mirror.
ExperimentScene prepare_experiment(const ExperimentConfig& cfg, std::uint64_t seed);

/// Marker pixels used to calibrate mirror j of the scene from `calibration`.
std::vector<Pixel> calibration_pixels(const SceneConfig& scene, const RenderOutput& calibration, std::size_t j,
                                      int outliers);

/// Scene used for the marker frame: mirrors with markers, a back wall, no
/// objects.
SceneConfig calibration_scene(const SceneConfig& scene, std::uint64_t seed);

/// Bounding box of the cloud grown by `padding_mm`, split into voxels.
VoxelGrid volume_around(const LabeledCloud& cloud, double voxel_size_mm, double padding_mm);

LabeledCloud reconstruct(const ExperimentConfig& cfg, const ExperimentScene& scene, Algorithm algorithm);

struct ShapeScore {
    ErrorReport error;
    double radius_mm = 0.0;
};

/// Fits the shape with RANSAC and evaluates the error over the whole cloud.
ShapeScore fit_and_score(const LabeledCloud& cloud, ShapeKind shape, const RansacConfig& ransac,
                         std::size_t normals_k);

ExperimentRun run_experiment(const ExperimentConfig& cfg, const ExperimentScene& scene, Algorithm algorithm);

enum class SweepVariable { mirror_angle_deg, object_distance_mm };
enum class SweepMetric { rmse, mean_error };

/// `object_distance_mm` varies the distance between the object center and the
/// mirror planes; the camera distance stays fixed.
struct SweepSpec {
    SweepVariable variable = SweepVariable::mirror_angle_deg;
    std::vector<double> values;
    int repetitions = 1;
    SweepMetric metric = SweepMetric::rmse;
    std::vector<Algorithm> algorithms{Algorithm::raw, Algorithm::carved};

    void validate() const;
};

/// CSV with one row per (value, repetition, algorithm). Per-row seeds are
/// derived from `seed`; the output is byte-identical for identical inputs.
/// A per-(value, algorithm) summary of the chosen metric goes to `summary`.
std::string run_sweep(const SweepSpec& spec, const ExperimentConfig& base, std::uint64_t seed,
                      std::ostream* summary = nullptr);

SweepSpec parse_sweep(const config::Json& j);
ExperimentConfig parse_experiment(const config::Json& j, const CameraIntrinsics& k);

// Command bodies behind the CLI verbs. Each throws mirror3d::Error on bad
// configuration or I/O failure.

struct RenderFiles {
    std::filesystem::path depth;
    std::filesystem::path mirrors;
    std::filesystem::path truth;
};

/// Writes `out` (PGM depth), `<stem>.mirrors.json` (truth planes, regions
/// and marker pixels, usable by reconstruct and calibrate) and
/// `<stem>.truth.json` (scene description and label counts).
RenderFiles cmd_render(const config::Document& doc, const std::filesystem::path& out,
                       std::optional<std::uint64_t> seed);

/// Writes a mirrors file with calibrated planes.
std::vector<Mirror> cmd_calibrate(const config::Document& doc, const std::filesystem::path& out,
                                  std::optional<std::uint64_t> seed);

/// Writes a PLY cloud; returns the number of points.
std::size_t cmd_reconstruct(const config::Document& doc, Algorithm mode, const std::filesystem::path& out);

/// Fits the cloud and returns the report; written to `out` when non-empty.
config::Json cmd_fit(const config::Document& doc, ShapeKind shape, const std::filesystem::path& out,
                     std::optional<std::uint64_t> seed, const std::optional<std::filesystem::path>& input);

/// Runs the sweep and writes the CSV to `out`; returns the CSV text.
std::string cmd_sweep(const config::Document& doc, const std::filesystem::path& out,
                      std::optional<std::uint64_t> seed, std::ostream* summary);

}  // namespace mirror3d
