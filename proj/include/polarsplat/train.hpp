#pragma once

// Analysis-by-synthesis training loop: Adam over the scene latents with one
// learning rate per parameter group.

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "polarsplat/errors.hpp"
#include "polarsplat/config.hpp"
#include "polarsplat/gradients.hpp"

namespace polarsplat {

enum class GridMapMode { Off, Literal, InverseDistance };

inline GridMapMode parseGridMapMode(const std::string& s) {
    if (s == "off") return GridMapMode::Off;
    if (s == "on" || s == "literal") return GridMapMode::Literal;
    if (s == "inverse") return GridMapMode::InverseDistance;
    throw ConfigError("gridmap must be on, off, literal or inverse: " + s);
}

inline const char* gridMapModeName(GridMapMode m) {
    switch (m) {
        case GridMapMode::Off: return "off";
        case GridMapMode::Literal: return "literal";
        case GridMapMode::InverseDistance: return "inverse";
    }
    return "off";
}

struct LearningRates {
    double position = 2e-4;
    double rotation = 2e-3;
    double scale = 2e-3;
    double opacity = 2e-2;
    double albedo = 2e-2;
    double roughness = 2e-2;
    double ior = 2e-2;
    double environment = 2e-2;
    double lpAngles = 5e-3;

    double of(ParamGroup g) const {
        switch (g) {
            case ParamGroup::Position: return position;
            case ParamGroup::Rotation: return rotation;
            case ParamGroup::Scale: return scale;
            case ParamGroup::Opacity: return opacity;
            case ParamGroup::Albedo: return albedo;
            case ParamGroup::Roughness: return roughness;
            case ParamGroup::Ior: return ior;
            case ParamGroup::Environment: return environment;
            case ParamGroup::LPAngles: return lpAngles;
        }
        return 0.0;
    }
};

struct TrainConfig {
    long iterations = 500;
    LearningRates lr;
    LossWeights weights;
    PolarizationMode mode = PolarizationMode::FullStokes;
    bool lpAnglesLearnable = false;
    GridMapMode gridmap = GridMapMode::Off;
    int gridmapResolution = kGridMapResolution;
    int gridmapRefreshInterval = kGridMapRefreshInterval;
    double divergenceFactor = 1e3;
    std::uint64_t seed = 0;

    void validate() const {
        if (iterations <= 0) throw ConfigError("iterations must be positive");
        if (gridmapRefreshInterval < 1) throw ConfigError("gridmap_refresh_interval must be at least 1");
        for (double w : {weights.lambda1, weights.lambda2, weights.lambda3, weights.lambda4})
            if (!(w >= 0.0)) throw ConfigError("loss weights must be nonnegative");
        for (double r : {lr.position, lr.rotation, lr.scale, lr.opacity, lr.albedo, lr.roughness, lr.ior,
                         lr.environment, lr.lpAngles})
            if (!(r >= 0.0)) throw ConfigError("learning rates must be nonnegative");
    }

    /// Freezes position, rotation, scale and opacity.
    void fixGeometry() { lr.position = lr.rotation = lr.scale = lr.opacity = 0.0; }
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and bad
/// values throw ConfigError. Keys not present keep the values in `base`.
inline TrainConfig parseTrainConfig(std::istream& in, TrainConfig base = {}) {
    TrainConfig c = base;
    SetterTable setters;
    setters["iterations"] = integerSetter(c.iterations);
    setters["seed"] = integerSetter(c.seed);
    setters["lr_position"] = numberSetter(c.lr.position);
    setters["lr_rotation"] = numberSetter(c.lr.rotation);
    setters["lr_scale"] = numberSetter(c.lr.scale);
    setters["lr_opacity"] = numberSetter(c.lr.opacity);
    setters["lr_albedo"] = numberSetter(c.lr.albedo);
    setters["lr_roughness"] = numberSetter(c.lr.roughness);
    setters["lr_ior"] = numberSetter(c.lr.ior);
    setters["lr_environment"] = numberSetter(c.lr.environment);
    setters["lr_lp_angles"] = numberSetter(c.lr.lpAngles);
    setters["lambda1"] = numberSetter(c.weights.lambda1);
    setters["lambda2"] = numberSetter(c.weights.lambda2);
    setters["lambda3"] = numberSetter(c.weights.lambda3);
    setters["lambda4"] = numberSetter(c.weights.lambda4);
    setters["lp_angles_learnable"] = flagSetter(c.lpAnglesLearnable);
    setters["gridmap_resolution"] = integerSetter(c.gridmapResolution);
    setters["gridmap_refresh_interval"] = integerSetter(c.gridmapRefreshInterval);
    setters["divergence_factor"] = numberSetter(c.divergenceFactor);
    setters["gridmap"] = [&c](const std::string& v) { c.gridmap = parseGridMapMode(v); };
    setters["polarization_mode"] = [&c](const std::string& v) {
        if (v == "fullStokes") c.mode = PolarizationMode::FullStokes;
        else if (v == "partialLP") c.mode = PolarizationMode::PartialLP;
        else throw ConfigError("polarization_mode must be fullStokes or partialLP: " + v);
    };
    setters["fixed_geometry"] = [&c](const std::string& v) {
        if (parseFlag(v)) c.fixGeometry();
    };
    applySettings(in, setters);
    c.validate();
    return c;
}

inline TrainConfig loadTrainConfig(const std::string& path, TrainConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parseTrainConfig(in, base);
}

/// Adam moments with the layout of SceneParameters.
struct AdamState {
    static constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-12;
    SceneGradient m, v;
    long step = 0;

    void resizeLike(const SceneParameters& p) {
        m.resizeLike(p);
        v.resizeLike(p);
        step = 0;
    }

    /// In-place update of x with gradient g; returns the change.
    double update(double& x, double g, double& mi, double& vi, double lr, double c1, double c2) const {
        mi = kBeta1 * mi + (1.0 - kBeta1) * g;
        vi = kBeta2 * vi + (1.0 - kBeta2) * g * g;
        const double d = -lr * (mi / c1) / (std::sqrt(vi / c2) + kEps);
        x += d;
        return d;
    }

    void apply(SceneParameters& p, const SceneGradient& g, const LearningRates& lr, bool lpLearnable) {
        ++step;
        const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
        for (std::size_t s = 0; s < p.surfels.size(); ++s)
            for (std::size_t k = 0; k < kSurfelParams; ++k) {
                const double rate = lr.of(surfelParamGroup(k));
                if (rate == 0.0) continue;
                update(p.surfels[s][k], g.surfels[s][k], m.surfels[s][k], v.surfels[s][k], rate, c1, c2);
            }
        if (lr.environment != 0.0)
            for (std::size_t t = 0; t < p.envLatents.size(); ++t)
                for (std::size_t c = 0; c < 3; ++c)
                    update(p.envLatents[t][c], g.env[t][c], m.env[t][c], v.env[t][c], lr.environment, c1, c2);
        if (lpLearnable && lr.lpAngles != 0.0)
            for (std::size_t a = 0; a < p.lpAngles.size(); ++a)
                update(p.lpAngles[a], g.lpAngles[a], m.lpAngles[a], v.lpAngles[a], lr.lpAngles, c1, c2);
        p.bakeTilts();
    }
};

/// Divergence abort; carries the state at the failing iteration for dumping.
struct TrainDiverged : NumericError {
    SceneParameters state;
    long iteration = 0;
    TrainDiverged(const std::string& what, SceneParameters s, long it)
        : NumericError(what), state(std::move(s)), iteration(it) {}
};

struct TrainResult {
    SceneParameters params;  // state with the lowest loss seen
    SceneParameters last;    // state after the final step
    std::vector<LossBreakdown> history;
    double bestLoss = 0.0;
    long bestIteration = 0;
    int gridRebuilds = 0;
};

/// Observer called after each iteration's loss evaluation.
using TrainObserver = std::function<void(long iteration, const LossBreakdown& loss, const SceneParameters& params)>;

/// Runs `config.iterations` Adam steps from `init`. The environment uses base
/// resolution `envResolution`; the GridMap, when enabled, is rebuilt every
/// refresh interval and treated as a constant in between.
inline TrainResult train(SceneParameters init, const std::vector<Observation>& observations, int envResolution,
                         const SplitSumLUT& lut, const TrainConfig& config, const TrainObserver& observer = {}) {
    config.validate();
    if (observations.size() < 2) throw ConfigError("training needs at least two observations");
    if (config.mode == PolarizationMode::PartialLP && init.lpAngles.empty())
        throw ConfigError("partial polarization mode needs LP angles");
    init.bakeTilts();
    EnvCubeMipmap env = buildMipChain(envResolution, init.envLatents);
    AnchorGrid grid;
    grid.resolution = config.gridmapResolution;
    grid.refreshInterval = config.gridmapRefreshInterval;
    grid.weighting = config.gridmap == GridMapMode::InverseDistance ? AnchorWeighting::InverseDistance
                                                                    : AnchorWeighting::Literal;
    LossSetup setup;
    setup.weights = config.weights;
    setup.mode = config.mode;

    TrainResult result;
    AdamState adam;
    adam.resizeLike(init);
    SceneParameters p = std::move(init);
    double initial = 0.0;
    for (long it = 0; it < config.iterations; ++it) {
        if (it > 0) env.setLatents(p.envLatents);
        const std::vector<SurfelGaussian> scene = p.scene();
        if (config.gridmap != GridMapMode::Off && refreshIfStale(grid, scene, env, it)) ++result.gridRebuilds;
        setup.lpAngles = p.lpAngles;
        SceneGradient g;
        const LossBreakdown loss = sceneLoss(scene, observations, env, lut,
                                             config.gridmap != GridMapMode::Off ? &grid : nullptr, setup, &g);
        if (it == 0) initial = loss.total;
        if (loss.total > config.divergenceFactor * initial && initial > 0.0) {
            std::ostringstream msg;
            msg << "training diverged at iteration " << it << ": loss " << loss.total << " vs initial " << initial
                << " (rgb " << loss.rgb << ", pol " << loss.pol << ", lp " << loss.lp << ", mask " << loss.mask
                << ", depth " << loss.depth << ", smooth " << loss.smooth << ")";
            throw TrainDiverged(msg.str(), p, it);
        }
        result.history.push_back(loss);
        if (it == 0 || loss.total < result.bestLoss) {
            result.bestLoss = loss.total;
            result.bestIteration = it;
            result.params = p;
        }
        if (observer) observer(it, loss, p);
        adam.apply(p, g, config.lr, config.lpAnglesLearnable);
    }
    result.last = std::move(p);
    return result;
}

}  // namespace polarsplat
