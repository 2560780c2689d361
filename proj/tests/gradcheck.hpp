#pragma once

// Central-difference gradient oracle on a small three-surfel scene.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "polarsplat/gradients.hpp"
#include "polarsplat/synth.hpp"

namespace polarsplat::testing {

inline constexpr double kFdStep = 1e-4;
inline constexpr double kFdRelTol = 1e-2;
inline constexpr double kFdAbsTol = 1e-6;

inline std::vector<SurfelGaussian> threeSurfelScene(double shift = 0.0) {
    std::vector<SurfelGaussian> s;
    SurfelMaterial m;
    m.albedo = {0.6, 0.4, 0.3};
    m.roughness = 0.35;
    m.ior = 1.6;
    m.opacity = 0.85;
    s.push_back(orientedSurfel({-0.15 + shift, 0.05, 0.0}, {0.2, 0.1, 1.0}, 0.35, m));
    m.albedo = {0.3, 0.5, 0.7};
    m.roughness = 0.5;
    m.ior = 1.45;
    m.opacity = 0.75;
    s.push_back(orientedSurfel({0.2, -0.1, 0.1}, {-0.3, 0.2, 1.0}, 0.3, m));
    m.albedo = {0.5, 0.5, 0.2};
    m.roughness = 0.2;
    m.ior = 1.9;
    m.opacity = 0.9;
    s.push_back(orientedSurfel({0.0, 0.2, -0.2}, {0.0, -0.4, 1.0}, 0.4, m));
    s[1].scaleV = 0.22;
    return s;
}

inline Camera threeSurfelCamera() { return Camera::lookAt({0.3, 0.2, 3.0}, {0, 0, 0}, {0, 1, 0}, 16, 16, 0.7); }

/// Full-Stokes observation rendered from a perturbed copy of the scene.
inline Observation threeSurfelObservation(const SplitSumLUT& lut) {
    const Camera cam = threeSurfelCamera();
    auto gt = threeSurfelScene(0.05);
    for (auto& g : gt) {
        g.albedo = g.albedo * 1.2;
        g.roughness += 0.05;
    }
    const EnvCubeMipmap env = buildMipChain(8, randomEnvironment(8, 4));
    const RenderOutputs o = renderOutputs(renderPolar(gt, cam, env, &lut), cam);
    Observation obs;
    obs.camera = cam;
    obs.s0 = o.s0;
    obs.s1 = o.s1;
    obs.s2 = o.s2;
    obs.mask = Image<double>(cam.width, cam.height);
    for (std::size_t i = 0; i < obs.mask.size(); ++i) obs.mask.pixels[i] = o.opacity.pixels[i] >= 0.5 ? 1.0 : 0.0;
    return obs;
}

/// Replaces the Stokes planes with two polarizer captures at the given
/// angles, each shifted by `offset`.
inline Observation toPartial(Observation obs, double theta0, double theta1, double offset = 0.0) {
    obs.captures = {{0, lpIntensity(obs.s0, obs.s1, obs.s2, theta0)}, {1, lpIntensity(obs.s0, obs.s1, obs.s2, theta1)}};
    for (LPCapture& c : obs.captures)
        for (Rgb& v : c.intensity.pixels) v = v + rgb(offset);
    obs.s0 = obs.s1 = obs.s2 = {};
    return obs;
}

struct FdMismatch {
    std::string what;
    double analytic, numeric;
};

struct FdReport {
    std::size_t checked = 0;
    std::vector<FdMismatch> mismatches;
    std::vector<std::size_t> checkedPerGroup = std::vector<std::size_t>(9, 0);
};

inline bool fdAgrees(double analytic, double numeric) {
    const double err = std::abs(analytic - numeric);
    return err <= kFdAbsTol || err <= kFdRelTol * std::max(std::abs(analytic), std::abs(numeric));
}

/// Compares the analytic gradient of sceneLoss at `p` with central
/// differences over every surfel latent, environment latent and LP angle.
/// The anchor grid, when given, is held fixed.
inline FdReport finiteDifferenceCheck(const SceneParameters& p, const std::vector<Observation>& obs, int envResolution,
                                      const SplitSumLUT& lut, const AnchorGrid* grid, LossSetup setup) {
    setup.lpAngles = p.lpAngles;
    const EnvCubeMipmap env = buildMipChain(envResolution, p.envLatents);
    SceneGradient g;
    sceneLoss(p.scene(), obs, env, lut, grid, setup, &g);

    auto eval = [&](const SceneParameters& q) {
        EnvCubeMipmap e = env;
        e.setLatents(q.envLatents);
        LossSetup s = setup;
        s.lpAngles = q.lpAngles;
        return sceneLoss(q.scene(), obs, e, lut, grid, s).total;
    };
    FdReport report;
    auto probe = [&](ParamGroup group, double analytic, auto&& perturb, const std::string& what) {
        SceneParameters a = p, b = p;
        perturb(a, kFdStep);
        perturb(b, -kFdStep);
        const double numeric = (eval(a) - eval(b)) / (2.0 * kFdStep);
        ++report.checked;
        ++report.checkedPerGroup[static_cast<std::size_t>(group)];
        if (!fdAgrees(analytic, numeric)) report.mismatches.push_back({what, analytic, numeric});
    };
    for (std::size_t s = 0; s < p.surfels.size(); ++s)
        for (std::size_t k = 0; k < kSurfelParams; ++k)
            probe(
                surfelParamGroup(k), g.surfels[s][k], [&](SceneParameters& q, double h) { q.surfels[s][k] += h; },
                "surfel " + std::to_string(s) + " " + surfelParamName(k));
    for (std::size_t t = 0; t < p.envLatents.size(); ++t)
        for (std::size_t c = 0; c < 3; ++c)
            probe(
                ParamGroup::Environment, g.env[t][c], [&](SceneParameters& q, double h) { q.envLatents[t][c] += h; },
                "env texel " + std::to_string(t) + " channel " + std::to_string(c));
    for (std::size_t a = 0; a < p.lpAngles.size(); ++a)
        probe(
            ParamGroup::LPAngles, g.lpAngles[a], [&](SceneParameters& q, double h) { q.lpAngles[a] += h; },
            "lp angle " + std::to_string(a));
    return report;
}

}  // namespace polarsplat::testing
