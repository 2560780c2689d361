#pragma once

// Unconstrained parameterization of the learnable scene state.
//
// Each surfel carries 13 latents: position (3), a tilt of its frame about
// its own tangent axes (2, zero at the current frame), log scales (2),
// opacity logit, albedo logits (3), roughness latent and IoR latent. The
// tilt keeps the tangents orthonormal by construction; after each optimizer
// step it is folded into the stored frame and reset to zero.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "polarsplat/activations.hpp"
#include "polarsplat/math.hpp"
#include "polarsplat/surfel.hpp"

namespace polarsplat {

inline constexpr std::size_t kSurfelParams = 13;
using SurfelVector = std::array<double, kSurfelParams>;

enum SurfelParam : std::size_t {
    kPosX,
    kPosY,
    kPosZ,
    kTiltU,
    kTiltV,
    kLogScaleU,
    kLogScaleV,
    kOpacityLogit,
    kAlbedoR,
    kAlbedoG,
    kAlbedoB,
    kRoughnessLatent,
    kIorLatent,
};

inline const char* surfelParamName(std::size_t k) {
    static const char* names[kSurfelParams] = {"position.x", "position.y", "position.z", "tilt.u",  "tilt.v",
                                               "logScale.u", "logScale.v", "opacity",    "albedo.r", "albedo.g",
                                               "albedo.b",   "roughness",  "ior"};
    return k < kSurfelParams ? names[k] : "?";
}

enum class ParamGroup { Position, Rotation, Scale, Opacity, Albedo, Roughness, Ior, Environment, LPAngles };

inline const char* groupName(ParamGroup g) {
    switch (g) {
        case ParamGroup::Position: return "position";
        case ParamGroup::Rotation: return "rotation";
        case ParamGroup::Scale: return "scale";
        case ParamGroup::Opacity: return "opacity";
        case ParamGroup::Albedo: return "albedo";
        case ParamGroup::Roughness: return "roughness";
        case ParamGroup::Ior: return "ior";
        case ParamGroup::Environment: return "environment";
        case ParamGroup::LPAngles: return "lp_angles";
    }
    return "?";
}

inline ParamGroup surfelParamGroup(std::size_t k) {
    if (k <= kPosZ) return ParamGroup::Position;
    if (k <= kTiltV) return ParamGroup::Rotation;
    if (k <= kLogScaleV) return ParamGroup::Scale;
    if (k == kOpacityLogit) return ParamGroup::Opacity;
    if (k <= kAlbedoB) return ParamGroup::Albedo;
    if (k == kRoughnessLatent) return ParamGroup::Roughness;
    return ParamGroup::Ior;
}

inline constexpr double kLatentClamp = 1e-6;

inline double clampedLogit(double p) { return logit(std::clamp(p, kLatentClamp, 1.0 - kLatentClamp)); }

/// Latents of `g` with zero tilt.
inline SurfelVector surfelLatents(const SurfelGaussian& g) {
    SurfelVector v{};
    v[kPosX] = g.position.x;
    v[kPosY] = g.position.y;
    v[kPosZ] = g.position.z;
    v[kLogScaleU] = std::log(g.scaleU);
    v[kLogScaleV] = std::log(g.scaleV);
    v[kOpacityLogit] = clampedLogit(g.opacity);
    v[kAlbedoR] = clampedLogit(g.albedo.x);
    v[kAlbedoG] = clampedLogit(g.albedo.y);
    v[kAlbedoB] = clampedLogit(g.albedo.z);
    v[kRoughnessLatent] = clampedLogit((g.roughness - kRoughnessMin) / (1.0 - kRoughnessMin));
    v[kIorLatent] = g.iorLatent;
    return v;
}

/// Tangents of `frame` tilted by the latents' rotation parameters.
inline void tiltedTangents(const SurfelGaussian& frame, double tiltU, double tiltV, Vec3d& tu, Vec3d& tv) {
    const Mat3d r = rotationFromAxisAngle(frame.tangentU * tiltU + frame.tangentV * tiltV);
    tu = r * frame.tangentU;
    tv = r * frame.tangentV;
}

/// Surfel described by `v`, with its frame taken from `frame`.
inline SurfelGaussian surfelFromLatents(const SurfelGaussian& frame, const SurfelVector& v) {
    SurfelGaussian g;
    g.position = {v[kPosX], v[kPosY], v[kPosZ]};
    tiltedTangents(frame, v[kTiltU], v[kTiltV], g.tangentU, g.tangentV);
    g.scaleU = std::exp(v[kLogScaleU]);
    g.scaleV = std::exp(v[kLogScaleV]);
    g.opacity = sigmoid(v[kOpacityLogit]);
    g.albedo = {sigmoid(v[kAlbedoR]), sigmoid(v[kAlbedoG]), sigmoid(v[kAlbedoB])};
    g.roughness = roughnessActivation(v[kRoughnessLatent]);
    g.iorLatent = v[kIorLatent];
    return g;
}

/// Learnable state: surfel latents over stored frames, environment latents
/// and polarizer angles.
struct SceneParameters {
    std::vector<SurfelGaussian> frames;
    std::vector<SurfelVector> surfels;
    std::vector<Rgb> envLatents;
    std::vector<double> lpAngles;

    static SceneParameters fromScene(const std::vector<SurfelGaussian>& scene, std::vector<Rgb> envLatents,
                                     std::vector<double> lpAngles = {}) {
        SceneParameters p;
        p.frames = scene;
        for (const auto& g : scene) p.surfels.push_back(surfelLatents(g));
        p.envLatents = std::move(envLatents);
        p.lpAngles = std::move(lpAngles);
        return p;
    }

    std::vector<SurfelGaussian> scene() const {
        std::vector<SurfelGaussian> out;
        out.reserve(surfels.size());
        for (std::size_t i = 0; i < surfels.size(); ++i) out.push_back(surfelFromLatents(frames[i], surfels[i]));
        return out;
    }

    /// Folds the tilts into the stored frames.
    void bakeTilts() {
        for (std::size_t i = 0; i < surfels.size(); ++i) {
            SurfelVector& v = surfels[i];
            if (v[kTiltU] == 0.0 && v[kTiltV] == 0.0) continue;
            Vec3d tu, tv;
            tiltedTangents(frames[i], v[kTiltU], v[kTiltV], tu, tv);
            // Re-orthonormalize against drift.
            tu = normalize(tu);
            tv = normalize(tv - tu * dot(tu, tv));
            frames[i].tangentU = tu;
            frames[i].tangentV = tv;
            v[kTiltU] = v[kTiltV] = 0.0;
        }
    }
};

/// Gradient with the same layout as SceneParameters.
struct SceneGradient {
    std::vector<SurfelVector> surfels;
    std::vector<Rgb> env;
    std::vector<double> lpAngles;

    void resizeLike(const SceneParameters& p) {
        surfels.assign(p.surfels.size(), SurfelVector{});
        env.assign(p.envLatents.size(), Rgb{});
        lpAngles.assign(p.lpAngles.size(), 0.0);
    }

    double squaredNorm() const {
        double s = 0.0;
        for (const auto& v : surfels)
            for (double x : v) s += x * x;
        for (const Rgb& e : env) s += dot(e, e);
        for (double a : lpAngles) s += a * a;
        return s;
    }
    double norm() const { return std::sqrt(squaredNorm()); }
};

}  // namespace polarsplat
