#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mirror3d/errors.hpp"
#include "mirror3d/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

std::optional<std::uint64_t> seed_of(const CLI::Option* opt, std::uint64_t value) {
    return opt->count() > 0 ? std::optional<std::uint64_t>(value) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mirror-assisted 3D reconstruction from a single depth image"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* cmd, bool needs_out) {
        cmd->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        auto* out = cmd->add_option("--out", out_path, "output file");
        if (needs_out) {
            out->required();
        }
        return cmd->add_option("--seed", seed, "override the random seed");
    };

    auto* render = app.add_subcommand("render", "render a synthetic depth image (PGM) with sidecars");
    auto* render_seed = add_common(render, true);

    auto* calibrate = app.add_subcommand("calibrate", "fit mirror planes to marker pixels");
    auto* calibrate_seed = add_common(calibrate, true);

    auto* reconstruct = app.add_subcommand("reconstruct", "reconstruct a point cloud (PLY)");
    add_common(reconstruct, true);
    std::string mode = "raw";
    reconstruct->add_option("--mode", mode, "raw or carve")
        ->check(CLI::IsMember({"raw", "carve", "carved"}));

    auto* fit = app.add_subcommand("fit", "fit a sphere or cylinder and report the error");
    auto* fit_seed = add_common(fit, false);
    std::string shape = "sphere";
    fit->add_option("--shape", shape, "sphere or cylinder")->check(CLI::IsMember({"sphere", "cylinder"}));
    std::string cloud_path;
    fit->add_option("--input", cloud_path, "PLY cloud (overrides the config's 'cloud')");

    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep and write CSV");
    auto* sweep_seed = add_common(sweep, true);
    bool quiet = false;
    sweep->add_flag("--quiet", quiet, "suppress the per-value summary");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto doc = mirror3d::config::load(config_path);
        if (render->parsed()) {
            const auto files = mirror3d::cmd_render(doc, out_path, seed_of(render_seed, seed));
            std::cout << "wrote " << files.depth.string() << ", " << files.mirrors.string() << ", "
                      << files.truth.string() << '\n';
        } else if (calibrate->parsed()) {
            const auto mirrors = mirror3d::cmd_calibrate(doc, out_path, seed_of(calibrate_seed, seed));
            for (std::size_t j = 0; j < mirrors.size(); ++j) {
                const auto& p = mirrors[j].plane;
                std::cout << "mirror " << j + 1 << ": " << p.a() << ' ' << p.b() << ' ' << p.c() << ' ' << p.d()
                          << '\n';
            }
        } else if (reconstruct->parsed()) {
            const auto n = mirror3d::cmd_reconstruct(doc, mirror3d::parse_algorithm(mode), out_path);
            std::cout << "wrote " << n << " points to " << out_path << '\n';
        } else if (fit->parsed()) {
            std::optional<fs::path> input;
            if (!cloud_path.empty()) {
                input = cloud_path;
            }
            const auto report =
                mirror3d::cmd_fit(doc, mirror3d::parse_shape(shape), out_path, seed_of(fit_seed, seed), input);
            std::cout << report.dump(2) << '\n';
        } else if (sweep->parsed()) {
            mirror3d::cmd_sweep(doc, out_path, seed_of(sweep_seed, seed), quiet ? nullptr : &std::cout);
        }
    } catch (const mirror3d::Error& e) {
        std::cerr << "mirror3d: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "mirror3d: unexpected error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
