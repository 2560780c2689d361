#pragma once

// Commands behind the polarsplat CLI. Each reads and writes files through
// io.hpp and returns a summary for the front end to print.
//
// Bundle layout written by cmdSynth:
//   scene.json, env.psfi        scene and environment latents
//   obs/view_NNN.psfi           full-Stokes observation (training input)
//   obs/lp_NNN_K.psfi           capture through polarizer K (partial mode)
//   obs/mask_NNN.psfi           object mask
//   ref/view_NNN.psfi           ground-truth Stokes image, every view
//   ref/normal_NNN.psfi         ground-truth normal map
//   ref/mask_NNN.psfi           ground-truth mask
// cmdRender writes view_NNN.psfi, normal_NNN.psfi and mask_NNN.psfi under
// the same names, so `eval` can pair rendered and reference files by name.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "polarsplat/config.hpp"
#include "polarsplat/io.hpp"
#include "polarsplat/metrics.hpp"
#include "polarsplat/synth.hpp"
#include "polarsplat/train.hpp"

namespace polarsplat {

inline constexpr int kDefaultLutSamples = 4096;
inline constexpr double kDecomposeTolerance = 1e-9;

inline std::string viewName(const std::string& prefix, std::size_t v, const std::string& suffix = "") {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%03zu", v);
    return prefix + "_" + buf + suffix;
}

// ---------------------------------------------------------------------------
// Shared plumbing

/// Environment from a file, with the resolution checked against the mip
/// schedule.
inline EnvCubeMipmap loadEnvironment(const fs::path& path, int* resolution = nullptr) {
    int res = 0;
    std::vector<Rgb> latents = envFromFloatImage(readFloatImage(path), &res);
    try {
        checkEnvResolution(res);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (resolution) *resolution = res;
    return buildMipChain(res, std::move(latents));
}

inline SplitSumLUT loadOrComputeLUT(const std::string& path, int samples = kDefaultLutSamples) {
    if (!path.empty()) return readLUT(path);
    return precomputeLUT(samples);
}

inline std::optional<AnchorGrid> makeGrid(GridMapMode mode, int resolution, const std::vector<SurfelGaussian>& scene,
                                          const EnvCubeMipmap& env) {
    if (mode == GridMapMode::Off) return std::nullopt;
    return buildAnchorGrid(scene, env, resolution,
                           mode == GridMapMode::InverseDistance ? AnchorWeighting::InverseDistance
                                                                : AnchorWeighting::Literal);
}

/// Mask from rendered opacity: 1 where the pixel is shaded.
inline Image<double> opacityMask(const Image<double>& opacity) {
    Image<double> m(opacity.width, opacity.height);
    for (std::size_t i = 0; i < m.size(); ++i) m.pixels[i] = opacity.pixels[i] >= kShadeOpacityThreshold ? 1.0 : 0.0;
    return m;
}

/// Parses a view selection: "all", "train", "held-out" or comma-separated
/// indices.
inline std::vector<std::size_t> selectViews(const SceneBundle& b, const std::string& spec) {
    std::vector<std::size_t> out;
    if (spec.empty() || spec == "all") {
        for (std::size_t v = 0; v < b.views.size(); ++v) out.push_back(v);
    } else if (spec == "train" || spec == "held-out") {
        for (std::size_t v = 0; v < b.views.size(); ++v)
            if (b.views[v].heldOut == (spec == "held-out")) out.push_back(v);
    } else {
        for (double x : parseNumberList(spec)) {
            if (x < 0 || x != std::floor(x) || x >= static_cast<double>(b.views.size()))
                throw ConfigError("no such view: " + trim(std::to_string(x)));
            out.push_back(static_cast<std::size_t>(x));
        }
    }
    return out;
}

/// Surfels facing at least one of `cameras` with incidence cosine >= minCos
/// and projecting inside its image.
inline std::vector<bool> observedSurfels(const std::vector<SurfelGaussian>& scene, const std::vector<Camera>& cameras,
                                         double minCos) {
    std::vector<bool> seen(scene.size(), false);
    for (std::size_t i = 0; i < scene.size(); ++i)
        for (const Camera& cam : cameras) {
            const Vec3d toEye = cam.center() - scene[i].position;
            if (dot(scene[i].normal(), normalize(toEye)) < minCos) continue;
            if (cam.toCamera(scene[i].position).z <= 0.0) continue;
            const auto [px, py] = cam.project(scene[i].position);
            if (px >= 0 && py >= 0 && px < cam.width && py < cam.height) {
                seen[i] = true;
                break;
            }
        }
    return seen;
}

struct MaterialErrors {
    double albedo = 0.0;  // mean absolute error over channels
    double ior = 0.0;     // mean absolute error
    double roughness = 0.0;
    std::size_t surfels = 0;
};

/// Per-surfel material errors between two scenes with matching surfel order,
/// restricted to `include` when given.
inline MaterialErrors materialErrors(const std::vector<SurfelGaussian>& estimate,
                                     const std::vector<SurfelGaussian>& reference,
                                     const std::vector<bool>* include = nullptr) {
    if (estimate.size() != reference.size()) throw std::invalid_argument("surfel counts differ");
    MaterialErrors e;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        if (include && !(*include)[i]) continue;
        const Rgb d = estimate[i].albedo - reference[i].albedo;
        e.albedo += (std::abs(d.x) + std::abs(d.y) + std::abs(d.z)) / 3.0;
        e.ior += std::abs(estimate[i].ior() - reference[i].ior());
        e.roughness += std::abs(estimate[i].roughness - reference[i].roughness);
        ++e.surfels;
    }
    if (e.surfels > 0) {
        e.albedo /= static_cast<double>(e.surfels);
        e.ior /= static_cast<double>(e.surfels);
        e.roughness /= static_cast<double>(e.surfels);
    }
    return e;
}

// ---------------------------------------------------------------------------
// synth

struct SynthConfig {
    Primitive primitive = Primitive::Sphere;
    int surfels = 500;
    SurfelMaterial material{{0.7, 0.5, 0.3}, 0.3, 1.5, 0.99};
    std::string environment = "random";  // random | hemisphere | constant | file
    std::string envFile;
    int envResolution = 32;
    std::uint64_t seed = 0;
    Rgb envTop{2.0, 2.0, 2.0};
    Rgb envBottom{0.05, 0.05, 0.05};
    int views = 8;
    int width = 64;
    int height = 64;
    double distance = 3.5;
    double elevation = 0.3;
    double fovY = 0.75;
    PolarizationMode mode = PolarizationMode::FullStokes;
    std::vector<double> lpAnglesDeg{0.0, 90.0};
    int holdOutEvery = 8;
    GridMapMode gridmap = GridMapMode::Off;
    int gridmapResolution = 32;
    int lutSamples = kDefaultLutSamples;
    std::string lutFile;

    void validate() const {
        if (surfels < 1) throw ConfigError("surfels must be positive");
        if (views < 1) throw ConfigError("views must be positive");
        if (width < 1 || height < 1) throw ConfigError("image size must be positive");
        if (!(distance > 0.0)) throw ConfigError("distance must be positive");
        if (!(fovY > 0.0 && fovY < kPi)) throw ConfigError("fov must lie in (0, pi)");
        if (holdOutEvery < 0) throw ConfigError("hold_out_every must be >= 0");
        if (environment == "file" && envFile.empty()) throw ConfigError("environment = file needs env_file");
        if (environment != "random" && environment != "hemisphere" && environment != "constant" &&
            environment != "file")
            throw ConfigError("environment must be random, hemisphere, constant or file: " + environment);
        if (environment != "file") {
            try {
                checkEnvResolution(envResolution);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        }
        if (mode == PolarizationMode::PartialLP && lpAnglesDeg.empty()) throw ConfigError("partial mode needs lp_angles");
        if (material.roughness < kRoughnessMin || material.roughness > 1.0)
            throw ConfigError("roughness must lie in [0.08, 1]");
        if (!(material.ior > kIorMin && material.ior < kIorMin + 1.0)) throw ConfigError("ior must lie in (1.3, 2.3)");
    }
};

inline Rgb parseRgb(const std::string& v) {
    const auto xs = parseNumberList(v);
    if (xs.size() == 1) return rgb(xs[0]);
    if (xs.size() != 3) throw ConfigError("expected one or three numbers");
    return {xs[0], xs[1], xs[2]};
}

inline SynthConfig parseSynthConfig(std::istream& in, SynthConfig base = {}) {
    SynthConfig c = base;
    SetterTable s;
    s["primitive"] = [&c](const std::string& v) {
        try {
            c.primitive = parsePrimitive(v);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    };
    s["surfels"] = integerSetter(c.surfels);
    s["albedo"] = [&c](const std::string& v) { c.material.albedo = parseRgb(v); };
    s["ior"] = numberSetter(c.material.ior);
    s["roughness"] = numberSetter(c.material.roughness);
    s["opacity"] = numberSetter(c.material.opacity);
    s["environment"] = [&c](const std::string& v) { c.environment = v; };
    s["env_file"] = [&c](const std::string& v) { c.envFile = v; };
    s["env_resolution"] = integerSetter(c.envResolution);
    s["env_top"] = [&c](const std::string& v) { c.envTop = parseRgb(v); };
    s["env_bottom"] = [&c](const std::string& v) { c.envBottom = parseRgb(v); };
    s["seed"] = integerSetter(c.seed);
    s["views"] = integerSetter(c.views);
    s["width"] = integerSetter(c.width);
    s["height"] = integerSetter(c.height);
    s["distance"] = numberSetter(c.distance);
    s["elevation"] = numberSetter(c.elevation);
    s["fov"] = numberSetter(c.fovY);
    s["polarization_mode"] = [&c](const std::string& v) {
        if (v == "fullStokes") c.mode = PolarizationMode::FullStokes;
        else if (v == "partialLP") c.mode = PolarizationMode::PartialLP;
        else throw ConfigError("polarization_mode must be fullStokes or partialLP: " + v);
    };
    s["lp_angles"] = [&c](const std::string& v) { c.lpAnglesDeg = parseNumberList(v); };
    s["hold_out_every"] = integerSetter(c.holdOutEvery);
    s["gridmap"] = [&c](const std::string& v) { c.gridmap = parseGridMapMode(v); };
    s["gridmap_resolution"] = integerSetter(c.gridmapResolution);
    s["lut_samples"] = integerSetter(c.lutSamples);
    s["lut_file"] = [&c](const std::string& v) { c.lutFile = v; };
    applySettings(in, s);
    return c;
}

inline SynthConfig loadSynthConfig(const std::string& path, SynthConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parseSynthConfig(in, base);
}

inline std::vector<Rgb> synthEnvironment(const SynthConfig& c, int* resolution) {
    *resolution = c.envResolution;
    if (c.environment == "random") return quantizeLatents(randomEnvironment(c.envResolution, c.seed));
    if (c.environment == "hemisphere")
        return quantizeLatents(hemisphereEnvironment(c.envResolution, c.envTop, c.envBottom));
    if (c.environment == "constant") return quantizeLatents(constantEnvironment(c.envResolution, c.envTop));
    int res = 0;
    loadEnvironment(c.envFile, &res);
    *resolution = res;
    return envFromFloatImage(readFloatImage(c.envFile));
}

struct SynthSummary {
    std::size_t surfels = 0;
    std::size_t views = 0;
    std::size_t heldOut = 0;
    int envResolution = 0;
};

/// Writes a synthetic bundle with ground-truth observations to `out`.
inline SynthSummary cmdSynth(const SynthConfig& c, const fs::path& out) {
    c.validate();
    SceneBundle b;
    b.surfels = primitiveSurfels(c.primitive, c.surfels, c.material);
    b.envLatents = synthEnvironment(c, &b.envResolution);
    b.cameras = cameraRing(c.views, c.distance, c.elevation, {0.0, 0.0, 0.0}, c.width, c.height, c.fovY);
    b.mode = c.mode;
    for (double a : c.lpAnglesDeg) b.lpAngles.push_back(a * kPi / 180.0);
    if (c.mode == PolarizationMode::FullStokes) b.lpAngles.clear();
    b.metadata = {{"generator", "synth"},
                  {"primitive", primitiveName(c.primitive)},
                  {"seed", c.seed},
                  {"environment", c.environment},
                  {"gridmap", gridMapModeName(c.gridmap)}};

    const SplitSumLUT lut = loadOrComputeLUT(c.lutFile, c.lutSamples);
    const EnvCubeMipmap env = buildMipChain(b.envResolution, b.envLatents);
    const auto grid = makeGrid(c.gridmap, c.gridmapResolution, b.surfels, env);

    SynthSummary summary{b.surfels.size(), b.cameras.size(), 0, b.envResolution};
    for (std::size_t v = 0; v < b.cameras.size(); ++v) {
        const Camera& cam = b.cameras[v];
        const PolarRender r = renderPolar(b.surfels, cam, env, &lut, grid ? &*grid : nullptr);
        const RenderOutputs o = renderOutputs(r, cam);
        const FloatImage mask = scalarToFloatImage(opacityMask(o.opacity), tags::kMask);
        writeFloatImage(out / "ref" / viewName("view", v, ".psfi"), toFloatImage(r.total));
        writeFloatImage(out / "ref" / viewName("normal", v, ".psfi"), normalToFloatImage(o.normal));
        writeFloatImage(out / "ref" / viewName("mask", v, ".psfi"), mask);

        ViewFiles f;
        f.heldOut = c.holdOutEvery > 0 && static_cast<int>(v % c.holdOutEvery) == c.holdOutEvery - 1;
        summary.heldOut += f.heldOut;
        f.mask = "obs/" + viewName("mask", v, ".psfi");
        writeFloatImage(out / f.mask, mask);
        if (c.mode == PolarizationMode::FullStokes) {
            f.stokes = "obs/" + viewName("view", v, ".psfi");
            writeFloatImage(out / f.stokes, toFloatImage(r.total));
        } else {
            for (std::size_t k = 0; k < b.lpAngles.size(); ++k) {
                const std::string name = "obs/" + viewName("lp", v, "_" + std::to_string(k) + ".psfi");
                writeFloatImage(out / name,
                                rgbToFloatImage(simulateLPCapture(r.total, b.lpAngles[k]), tags::kCapture));
                f.captures.emplace_back(static_cast<int>(k), name);
            }
        }
        b.views.push_back(std::move(f));
    }
    b.save(out);
    return summary;
}

// ---------------------------------------------------------------------------
// render, decompose, relight

struct RenderOptions {
    std::string views = "all";
    bool decompose = false;
    bool previews = false;
    double exposure = 1.0;
    GridMapMode gridmap = GridMapMode::Off;
    int gridmapResolution = 32;
    std::string lutFile;
    std::string envFile;  // relight: replaces the bundle environment
};

struct RenderSummary {
    std::vector<std::size_t> views;
    int gridRebuilds = 0;
    double maxDecomposeError = 0.0;
};

/// Largest |total - (diffuse + specular)| relative to 1 + |total|.
inline double decomposeError(const PolarRender& r) {
    double worst = 0.0;
    for (std::size_t i = 0; i < r.total.pixels.size(); ++i) {
        const SpectralStokes sum = r.diffuse.pixels[i] + r.specular.pixels[i];
        const SpectralStokes& t = r.total.pixels[i];
        for (const auto& [a, b] : {std::pair{t.s0, sum.s0}, std::pair{t.s1, sum.s1}, std::pair{t.s2, sum.s2}})
            for (std::size_t c = 0; c < 3; ++c)
                worst = std::max(worst, std::abs(a[c] - b[c]) / (1.0 + std::abs(a[c])));
    }
    return worst;
}

inline RenderSummary cmdRender(const fs::path& bundleDir, const fs::path& out, const RenderOptions& opt) {
    const SceneBundle b = SceneBundle::load(bundleDir);
    const SplitSumLUT lut = loadOrComputeLUT(opt.lutFile);
    int res = b.envResolution;
    const EnvCubeMipmap env = opt.envFile.empty() ? buildMipChain(b.envResolution, b.envLatents)
                                                  : loadEnvironment(opt.envFile, &res);
    RenderSummary summary;
    summary.views = selectViews(b, opt.views);
    const auto grid = makeGrid(opt.gridmap, opt.gridmapResolution, b.surfels, env);
    summary.gridRebuilds = grid ? 1 : 0;
    for (std::size_t v : summary.views) {
        const Camera& cam = b.cameras[v];
        const PolarRender r = renderPolar(b.surfels, cam, env, &lut, grid ? &*grid : nullptr);
        const double err = decomposeError(r);
        summary.maxDecomposeError = std::max(summary.maxDecomposeError, err);
        if (!(err <= kDecomposeTolerance))
            throw NumericError("view " + std::to_string(v) + ": total differs from diffuse + specular by " +
                               std::to_string(err));
        const RenderOutputs o = renderOutputs(r, cam);
        writeFloatImage(out / viewName("view", v, ".psfi"), toFloatImage(r.total));
        writeFloatImage(out / viewName("normal", v, ".psfi"), normalToFloatImage(o.normal));
        writeFloatImage(out / viewName("mask", v, ".psfi"), scalarToFloatImage(opacityMask(o.opacity), tags::kMask));
        if (opt.previews) writePreview(out / viewName("view", v, ".ppm"), o.s0, opt.exposure);
        if (opt.decompose) {
            writeFloatImage(out / viewName("view", v, "_diffuse.psfi"), toFloatImage(r.diffuse));
            writeFloatImage(out / viewName("view", v, "_specular.psfi"), toFloatImage(r.specular));
            if (opt.previews) {
                Image<Rgb> d(cam.width, cam.height), s(cam.width, cam.height);
                for (std::size_t i = 0; i < d.size(); ++i) {
                    d.pixels[i] = r.diffuse.pixels[i].s0;
                    s.pixels[i] = r.specular.pixels[i].s0;
                }
                writePreview(out / viewName("view", v, "_diffuse.ppm"), d, opt.exposure);
                writePreview(out / viewName("view", v, "_specular.ppm"), s, opt.exposure);
            }
        }
    }
    return summary;
}

/// Re-renders every selected view under a new environment; the decomposed
/// components are always written.
inline RenderSummary cmdRelight(const fs::path& bundleDir, const fs::path& envFile, const fs::path& out,
                                RenderOptions opt) {
    opt.envFile = envFile.string();
    opt.decompose = true;
    return cmdRender(bundleDir, out, opt);
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
    TrainConfig config;
    bool perturbedInit = true;       // gray albedo 0.5, roughness 0.5, ior latent 0, env radiance 0.5
    std::vector<double> lpInitDeg;   // partial mode; empty keeps the bundle angles
    std::string lutFile;
    bool quiet = true;
    std::ostream* log = nullptr;     // progress lines when set
    long logEvery = 50;
};

struct TrainSummary {
    long iterations = 0;
    double initialLoss = 0.0;
    double bestLoss = 0.0;
    long bestIteration = 0;
    int gridRebuilds = 0;
    std::vector<double> lpAnglesDeg;
};

inline SceneParameters perturbedStart(const SceneBundle& b) {
    std::vector<SurfelGaussian> scene = b.surfels;
    for (SurfelGaussian& g : scene) {
        g.albedo = rgb(0.5);
        g.roughness = 0.5;
        g.iorLatent = 0.0;
    }
    return SceneParameters::fromScene(scene, constantEnvironment(b.envResolution, rgb(0.5)), b.lpAngles);
}

inline void writeLossCsv(const fs::path& path, const std::vector<LossBreakdown>& history) {
    std::ostringstream csv;
    csv << std::setprecision(17) << "iteration,total,rgb,pol,lp,mask,depth,smooth\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        const LossBreakdown& l = history[i];
        csv << i << ',' << l.total << ',' << l.rgb << ',' << l.pol << ',' << l.lp << ',' << l.mask << ',' << l.depth
            << ',' << l.smooth << '\n';
    }
    detail::writeBytes(path, csv.str());
}

/// Optimizes the bundle in `bundleDir` against its training views and writes
/// the optimized bundle, loss.csv and checkpoint.json to `out`. Observation
/// and reference files are copied so the output is a complete bundle.
inline TrainSummary cmdTrain(const fs::path& bundleDir, const fs::path& out, const TrainOptions& opt) {
    const SceneBundle b = SceneBundle::load(bundleDir);
    TrainConfig config = opt.config;
    config.mode = b.mode;
    const std::vector<Observation> observations = loadObservations(b, bundleDir, selectViews(b, "train"));
    const SplitSumLUT lut = loadOrComputeLUT(opt.lutFile);

    SceneParameters init = opt.perturbedInit ? perturbedStart(b) : b.parameters();
    if (!opt.lpInitDeg.empty()) {
        if (opt.lpInitDeg.size() != b.lpAngles.size()) throw ConfigError("lp_init needs one angle per polarizer");
        init.lpAngles.clear();
        for (double a : opt.lpInitDeg) init.lpAngles.push_back(a * kPi / 180.0);
    }

    TrainObserver observer;
    if (opt.log)
        observer = [&](long it, const LossBreakdown& l, const SceneParameters&) {
            if (it % opt.logEvery == 0 || it + 1 == config.iterations)
                *opt.log << "iteration " << it << " loss " << l.total << '\n';
        };
    fs::create_directories(out);
    TrainResult r;
    try {
        r = train(init, observations, b.envResolution, lut, config, observer);
    } catch (const TrainDiverged& e) {
        writeCheckpoint(out / "diverged.json", e.state, b.envResolution, e.iteration);
        throw;
    }
    writeLossCsv(out / "loss.csv", r.history);
    writeCheckpoint(out / "checkpoint.json", r.params, b.envResolution, config.iterations);

    SceneBundle result = b;
    result.surfels = r.params.scene();
    result.envLatents = quantizeLatents(r.params.envLatents);
    result.lpAngles = r.params.lpAngles;
    result.metadata["generator"] = "train";
    result.metadata["iterations"] = config.iterations;
    result.metadata["bestIteration"] = r.bestIteration;
    result.metadata["gridmap"] = gridMapModeName(config.gridmap);
    for (const char* sub : {"obs", "ref"})
        if (fs::exists(bundleDir / sub) && !fs::equivalent(bundleDir, out))
            fs::copy(bundleDir / sub, out / sub, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    result.save(out);

    TrainSummary s;
    s.iterations = config.iterations;
    s.initialLoss = r.history.front().total;
    s.bestLoss = r.bestLoss;
    s.bestIteration = r.bestIteration;
    s.gridRebuilds = r.gridRebuilds;
    for (double a : r.params.lpAngles) s.lpAnglesDeg.push_back(a * 180.0 / kPi);
    return s;
}

// ---------------------------------------------------------------------------
// eval

struct EvalRow {
    std::string file;
    std::string metric;
    double value = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::size_t images = 0;
    std::size_t normalMaps = 0;
    double psnr = 0.0;  // means over images
    double ssim = 0.0;
    double cosineDistance = 0.0;  // means over normal maps
    double maeDegrees = 0.0;

    std::string csv() const {
        std::ostringstream o;
        o << std::setprecision(10) << "file,metric,value\n";
        for (const EvalRow& r : rows) o << r.file << ',' << r.metric << ',' << r.value << '\n';
        return o.str();
    }

    std::string text() const {
        std::ostringstream o;
        o << std::fixed << std::setprecision(4);
        for (const EvalRow& r : rows) o << std::left << std::setw(24) << r.file << std::setw(8) << r.metric << r.value << '\n';
        if (images > 0) o << "mean over " << images << " images: PSNR " << psnr << " dB, SSIM " << ssim << '\n';
        if (normalMaps > 0)
            o << "mean over " << normalMaps << " normal maps: CD " << cosineDistance << ", MAE " << maeDegrees
              << " deg\n";
        return o.str();
    }
};

/// Compares every Stokes image and normal map in `rendered` with the file of
/// the same name in `reference`. Normal maps use the reference mask of the
/// same view when present.
inline EvalReport cmdEval(const fs::path& rendered, const fs::path& reference) {
    if (!fs::is_directory(rendered)) throw IoError("not a directory: " + rendered.string());
    if (!fs::is_directory(reference)) throw IoError("not a directory: " + reference.string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(rendered))
        if (e.is_regular_file() && e.path().extension() == ".psfi") files.push_back(e.path().filename());
    std::sort(files.begin(), files.end());

    EvalReport report;
    for (const fs::path& name : files) {
        const FloatImage a = readFloatImage(rendered / name);
        const bool stokes = a.component == tags::kStokesTotal;
        const bool normal = a.component == tags::kNormal;
        if (!stokes && !normal) continue;
        if (!fs::exists(reference / name)) throw IoError("no reference for " + name.string());
        const FloatImage b = readFloatImage(reference / name);
        if (a.width != b.width || a.height != b.height || a.planes() != b.planes() || a.component != b.component)
            throw ConfigError("mismatched dimensions or contents for " + name.string());
        if (stokes) {
            const Image<Rgb> x = rgbPlanes(a, 0), y = rgbPlanes(b, 0);
            const double p = psnr(x, y), s = ssimRgb(x, y);
            report.rows.push_back({name.string(), "psnr", p});
            report.rows.push_back({name.string(), "ssim", s});
            report.psnr += p;
            report.ssim += s;
            ++report.images;
        } else {
            std::string maskName = name.string();
            maskName.replace(0, std::string("normal").size(), "mask");
            std::optional<Image<double>> mask;
            if (fs::exists(reference / maskName)) {
                const FloatImage m = readFloatImage(reference / maskName);
                if (m.width != a.width || m.height != a.height) throw ConfigError("mismatched mask for " + name.string());
                mask = scalarPlane(m);
            }
            const NormalErrors e = normalErrors(normalPlanes(a), normalPlanes(b), mask ? &*mask : nullptr);
            report.rows.push_back({name.string(), "cd", e.cosineDistance});
            report.rows.push_back({name.string(), "mae", e.maeDegrees});
            report.cosineDistance += e.cosineDistance;
            report.maeDegrees += e.maeDegrees;
            ++report.normalMaps;
        }
    }
    if (report.images == 0 && report.normalMaps == 0) throw IoError("no comparable files in " + rendered.string());
    if (report.images > 0) {
        report.psnr /= static_cast<double>(report.images);
        report.ssim /= static_cast<double>(report.images);
    }
    if (report.normalMaps > 0) {
        report.cosineDistance /= static_cast<double>(report.normalMaps);
        report.maeDegrees /= static_cast<double>(report.normalMaps);
    }
    return report;
}

// ---------------------------------------------------------------------------
// lut

inline SplitSumLUT cmdLut(const fs::path& out, int samples, int cosCount, int roughCount) {
    if (samples < 1024) throw ConfigError("LUT needs at least 1024 samples");
    if (cosCount < 2 || roughCount < 2) throw ConfigError("LUT needs at least 2 nodes per axis");
    const SplitSumLUT lut = precomputeLUT(samples, cosCount, roughCount);
    writeLUT(out, lut);
    return lut;
}

}  // namespace polarsplat
