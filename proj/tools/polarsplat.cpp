// polarsplat: command-line front end for synthesis, rendering, training and
// evaluation of polarimetric surfel scenes.
//
// Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numeric
// failure.

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>

#include "polarsplat/toolkit.hpp"

using namespace polarsplat;

namespace {

constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

double secondsSince(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void printRender(const RenderSummary& s, const std::string& out) {
    std::cout << "rendered " << s.views.size() << " view(s) to " << out;
    if (s.gridRebuilds > 0) std::cout << " (gridmap built once)";
    std::cout << ", max |total - (diffuse + specular)| " << s.maxDecomposeError << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polarimetric surfel splatting: synthesize, render, train and evaluate scenes."};
    app.require_subcommand(1);
    app.set_version_flag("--version", "polarsplat 1.0");

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic bundle with ground-truth observations");
    std::string synthConfig, synthOut, primitive, mode, lpAngles, synthGridmap, synthLut;
    std::optional<std::uint64_t> synthSeed;
    std::optional<int> synthViews, surfels, width, height, envRes;
    synth->add_option("--config", synthConfig, "Synth configuration file (key = value)")->check(CLI::ExistingFile);
    synth->add_option("--out", synthOut, "Output bundle directory")->required();
    synth->add_option("--primitive", primitive, "sphere, bowl or corner");
    synth->add_option("--seed", synthSeed, "Environment seed");
    synth->add_option("--views", synthViews, "Number of ring cameras");
    synth->add_option("--surfels", surfels, "Surfel count");
    synth->add_option("--width", width, "Image width");
    synth->add_option("--height", height, "Image height");
    synth->add_option("--env-resolution", envRes, "Environment cube face resolution");
    synth->add_option("--mode", mode, "fullStokes or partialLP");
    synth->add_option("--lp-angles", lpAngles, "Polarizer angles in degrees, comma separated");
    synth->add_option("--gridmap", synthGridmap, "on, off, literal or inverse");
    synth->add_option("--lut", synthLut, "Precomputed split-sum table");

    // render / decompose / relight share their options
    struct RenderArgs {
        std::string bundle, out, views = "all", gridmap = "off", lut, env;
        int gridmapResolution = 32;
        bool previews = false;
        double exposure = 1.0;
    };
    RenderArgs renderArgs, decomposeArgs, relightArgs;
    auto addRenderOptions = [](CLI::App* cmd, RenderArgs& a) {
        cmd->add_option("bundle", a.bundle, "Scene bundle directory")->required();
        cmd->add_option("--out", a.out, "Output directory")->required();
        cmd->add_option("--views", a.views, "all, train, held-out or comma-separated indices");
        cmd->add_option("--gridmap", a.gridmap, "on, off, literal or inverse");
        cmd->add_option("--gridmap-resolution", a.gridmapResolution, "Local cubemap face resolution");
        cmd->add_option("--lut", a.lut, "Precomputed split-sum table");
        cmd->add_flag("--previews", a.previews, "Also write sRGB previews of s0");
        cmd->add_option("--exposure", a.exposure, "Preview exposure multiplier");
    };
    auto* render = app.add_subcommand("render", "Render total Stokes images of a bundle");
    addRenderOptions(render, renderArgs);
    auto* decompose = app.add_subcommand("decompose", "Render total, diffuse and specular Stokes images");
    addRenderOptions(decompose, decomposeArgs);
    auto* relight = app.add_subcommand("relight", "Re-render a bundle under a new environment");
    addRenderOptions(relight, relightArgs);
    relight->add_option("--env", relightArgs.env, "Environment file (latents or linear radiance)")->required();

    // train
    auto* trainCmd = app.add_subcommand("train", "Optimize a bundle against its training views");
    std::string trainBundle, trainOut, trainConfig, trainGridmap, trainInit = "perturbed", lpInit, trainLut;
    std::optional<std::uint64_t> trainSeed;
    std::optional<long> iterations;
    long logEvery = 50;
    trainCmd->add_option("bundle", trainBundle, "Scene bundle directory")->required();
    trainCmd->add_option("--out", trainOut, "Output bundle directory")->required();
    trainCmd->add_option("--config", trainConfig, "Training configuration file (key = value)")
        ->check(CLI::ExistingFile);
    trainCmd->add_option("--seed", trainSeed, "Training seed");
    trainCmd->add_option("--gridmap", trainGridmap, "on, off, literal or inverse");
    trainCmd->add_option("--iterations", iterations, "Iteration count");
    trainCmd->add_option("--init", trainInit, "perturbed or bundle")->check(CLI::IsMember({"perturbed", "bundle"}));
    trainCmd->add_option("--lp-init", lpInit, "Initial polarizer angles in degrees, comma separated");
    trainCmd->add_option("--lut", trainLut, "Precomputed split-sum table");
    trainCmd->add_option("--log-every", logEvery, "Progress line interval")->check(CLI::PositiveNumber);

    // eval
    auto* eval = app.add_subcommand("eval", "Compare rendered images and normals against references");
    std::string rendered, reference, evalOut;
    eval->add_option("rendered", rendered, "Directory of rendered files")->required();
    eval->add_option("reference", reference, "Directory of reference files")->required();
    eval->add_option("--out", evalOut, "CSV report path");

    // lut
    auto* lutCmd = app.add_subcommand("lut", "Precompute and cache the split-sum table");
    std::string lutOut;
    int lutSamples = kDefaultLutSamples, cosNodes = 32, roughNodes = 32;
    lutCmd->add_option("--out", lutOut, "Output file")->required();
    lutCmd->add_option("--samples", lutSamples, "Importance samples per node");
    lutCmd->add_option("--cos-nodes", cosNodes, "Nodes along cos(theta)");
    lutCmd->add_option("--rough-nodes", roughNodes, "Nodes along roughness");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (*synth) {
            SynthConfig c = synthConfig.empty() ? SynthConfig{} : loadSynthConfig(synthConfig);
            if (!primitive.empty()) {
                try {
                    c.primitive = parsePrimitive(primitive);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
            }
            if (synthSeed) c.seed = *synthSeed;
            if (synthViews) c.views = *synthViews;
            if (surfels) c.surfels = *surfels;
            if (width) c.width = *width;
            if (height) c.height = *height;
            if (envRes) c.envResolution = *envRes;
            if (!mode.empty()) {
                try {
                    c.mode = parseModeName(mode);
                } catch (const IoError& e) {
                    throw ConfigError(e.what());
                }
            }
            if (!lpAngles.empty()) c.lpAnglesDeg = parseNumberList(lpAngles);
            if (!synthGridmap.empty()) c.gridmap = parseGridMapMode(synthGridmap);
            if (!synthLut.empty()) c.lutFile = synthLut;
            const SynthSummary s = cmdSynth(c, synthOut);
            std::cout << "wrote " << synthOut << ": " << s.surfels << " surfels, " << s.views << " views (" << s.heldOut
                      << " held out), environment " << s.envResolution << "^2 x 6\n";
        } else if (*render || *decompose || *relight) {
            const RenderArgs& a = *render ? renderArgs : (*decompose ? decomposeArgs : relightArgs);
            RenderOptions opt;
            opt.views = a.views;
            opt.gridmap = parseGridMapMode(a.gridmap);
            opt.gridmapResolution = a.gridmapResolution;
            opt.lutFile = a.lut;
            opt.previews = a.previews;
            opt.exposure = a.exposure;
            opt.decompose = !*render;
            const RenderSummary s =
                *relight ? cmdRelight(a.bundle, a.env, a.out, opt) : cmdRender(a.bundle, a.out, opt);
            printRender(s, a.out);
        } else if (*trainCmd) {
            TrainOptions opt;
            if (!trainConfig.empty()) opt.config = loadTrainConfig(trainConfig);
            if (trainSeed) opt.config.seed = *trainSeed;
            if (iterations) opt.config.iterations = *iterations;
            if (!trainGridmap.empty()) opt.config.gridmap = parseGridMapMode(trainGridmap);
            opt.config.validate();
            opt.perturbedInit = trainInit == "perturbed";
            if (!lpInit.empty()) opt.lpInitDeg = parseNumberList(lpInit);
            opt.lutFile = trainLut;
            opt.log = &std::cout;
            opt.logEvery = logEvery;
            const TrainSummary s = cmdTrain(trainBundle, trainOut, opt);
            std::cout << "trained " << s.iterations << " iterations: loss " << s.initialLoss << " -> " << s.bestLoss
                      << " (best at " << s.bestIteration << ")";
            if (s.gridRebuilds > 0) std::cout << ", gridmap rebuilt " << s.gridRebuilds << " time(s)";
            if (!s.lpAnglesDeg.empty()) {
                std::cout << ", polarizer angles";
                for (double a : s.lpAnglesDeg) std::cout << ' ' << a;
                std::cout << " deg";
            }
            std::cout << "\n";
        } else if (*eval) {
            const EvalReport r = cmdEval(rendered, reference);
            std::cout << r.text();
            if (!evalOut.empty()) detail::writeBytes(evalOut, r.csv());
        } else if (*lutCmd) {
            const SplitSumLUT lut = cmdLut(lutOut, lutSamples, cosNodes, roughNodes);
            std::cout << "wrote " << lutOut << " (" << lut.cosCount << " x " << lut.roughCount << " nodes)\n";
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    std::cerr << "done in " << secondsSince(t0) << " s\n";
    return 0;
}
