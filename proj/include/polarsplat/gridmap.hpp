#pragma once

// Self-occlusion-aware lighting: anchor cameras on a padded bounding box, one
// ray-traced local cubemap per anchor, and distance-weighted blending of the
// per-anchor lighting at a surface point. World up is +y, so the bottom face
// of the box is its y-min face.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

#include "polarsplat/cubemap.hpp"
#include "polarsplat/dual.hpp"
#include "polarsplat/envlight.hpp"
#include "polarsplat/math.hpp"
#include "polarsplat/parallel.hpp"
#include "polarsplat/polcore.hpp"
#include "polarsplat/raycast.hpp"
#include "polarsplat/surfel.hpp"

namespace polarsplat {

enum class AnchorWeighting { Literal, InverseDistance };

inline constexpr int kGridMapResolution = 64;
inline constexpr int kGridMapRefreshInterval = 300;
inline constexpr int kGridMapIrradianceResolution = 16;
inline constexpr double kAnchorBoxScale = 1.1;
inline constexpr double kAnchorDistanceEpsilon = 1e-6;

/// 4x4 lattice on each face of `bbox` scaled by `scale`, deduplicated, without
/// the four lattice points interior to the bottom face.
inline std::vector<Vec3d> placeAnchors(const Aabb& bbox, double scale = kAnchorBoxScale) {
    const Vec3d ext = bbox.extent();
    if (!bbox.valid() || !(ext.x > 0.0) || !(ext.y > 0.0) || !(ext.z > 0.0))
        throw std::invalid_argument("placeAnchors: degenerate bounding box");
    const Aabb box = bbox.scaled(scale);
    // Lattice coordinates k in {0..3} per axis; a point is on the surface when
    // some coordinate is 0 or 3.
    std::vector<Vec3d> out;
    for (int ky = 0; ky < 4; ++ky)
        for (int kz = 0; kz < 4; ++kz)
            for (int kx = 0; kx < 4; ++kx) {
                const bool onSurface = kx == 0 || kx == 3 || ky == 0 || ky == 3 || kz == 0 || kz == 3;
                if (!onSurface) continue;
                const bool bottomInterior = ky == 0 && kx > 0 && kx < 3 && kz > 0 && kz < 3;
                if (bottomInterior) continue;
                out.push_back({box.lo.x + ext.x * scale * kx / 3.0, box.lo.y + ext.y * scale * ky / 3.0,
                               box.lo.z + ext.z * scale * kz / 3.0});
            }
    return out;
}

/// Blend weights of the anchors at `p`, unnormalized.
template <typename T>
std::vector<T> anchorWeights(const Vec3<T>& p, const std::vector<Vec3d>& anchors, AnchorWeighting mode) {
    std::vector<T> w;
    w.reserve(anchors.size());
    for (const Vec3d& c : anchors) {
        const T d = length(p - Vec3<T>(c));
        if (mode == AnchorWeighting::Literal) {
            w.push_back(d);
        } else {
            w.push_back(value(d) > kAnchorDistanceEpsilon ? T(1.0) / d : T(1.0 / kAnchorDistanceEpsilon));
        }
    }
    return w;
}

/// Distance-weighted blend of per-anchor Stokes vectors.
inline SpectralStokes localizedDiffuse(const Vec3d& p, const std::vector<SpectralStokes>& perAnchorStokes,
                                       const std::vector<Vec3d>& anchors,
                                       AnchorWeighting mode = AnchorWeighting::Literal) {
    if (perAnchorStokes.size() != anchors.size()) throw std::invalid_argument("localizedDiffuse: size mismatch");
    const std::vector<double> w = anchorWeights(p, anchors, mode);
    double total = 0.0;
    SpectralStokes acc;
    for (std::size_t i = 0; i < anchors.size(); ++i) {
        acc += perAnchorStokes[i] * w[i];
        total += w[i];
    }
    if (!(total > 0.0)) return perAnchorStokes.empty() ? SpectralStokes{} : perAnchorStokes.front();
    return acc * (1.0 / total);
}

/// False when the ray from p + eps * n along `dir` hits the object.
inline bool visibility(const Vec3d& p, const Vec3d& n, const Vec3d& dir, const SurfelTracer& tracer, double eps) {
    return !tracer.occluded(p + n * eps, dir);
}

/// Value of the global map for texel `t` of a cube with layout `layout`: the
/// base texel itself when resolutions agree, else a bilinear base-level sample.
inline Rgb globalMapSample(const EnvCubeMipmap& env, const CubeLayout& layout, std::size_t t) {
    if (layout.resolution == env.baseResolution) return env.base()[t];
    return sampleLevel<double>(env, 0, layout.direction(t));
}

/// Radiance seen from `anchor`: hit texels carry the hit surfel's outgoing
/// diffuse radiance under the global map, missed texels the global map.
inline std::vector<Rgb> buildLocalCubemap(const Vec3d& anchor, const std::vector<SurfelGaussian>& scene,
                                          const SurfelTracer& tracer, const EnvCubeMipmap& env,
                                          const CubeLayout& layout) {
    std::vector<Rgb> out(layout.texelCount());
    // Outgoing radiance only depends on the hit surfel and which side faces
    // the anchor.
    std::map<std::pair<int, bool>, Rgb> cache;
    for (std::size_t t = 0; t < out.size(); ++t) {
        const Vec3d dir = layout.direction(t);
        const auto hit = tracer.nearestHit(anchor, dir);
        if (!hit) {
            out[t] = globalMapSample(env, layout, t);
            continue;
        }
        const SurfelGaussian& g = scene[static_cast<std::size_t>(hit->surfel)];
        Vec3d n = g.normal();
        const bool flipped = dot(n, dir) > 0.0;
        if (flipped) n = -n;
        auto it = cache.find({hit->surfel, flipped});
        if (it == cache.end()) {
            const Rgb c = hadamard(g.albedo, diffuseIrradiance(env, n)) * kInvPi;
            it = cache.emplace(std::make_pair(hit->surfel, flipped), c).first;
        }
        out[t] = it->second;
    }
    return out;
}

/// Irradiance of a radiance cube sampled on a cube of edge `resolution`, each
/// texel summed over the radiance box-reduced to at most that resolution.
inline EnvCubeMipmap irradianceCube(const EnvCubeMipmap& radiance, int resolution) {
    std::vector<Rgb> src = radiance.base();
    auto srcLayout = makeCubeLayout(radiance.baseResolution);
    while (srcLayout->resolution > resolution) {
        auto coarse = makeCubeLayout(srcLayout->resolution / 2);
        src = boxReduce(*srcLayout, *coarse, src);
        srcLayout = coarse;
    }
    auto filter = sharedMipFilter(resolution, 1, kDefaultMipSamples);
    const CubeLayout& out = *filter->layouts[0];
    std::vector<Rgb> irr(out.texelCount());
    for (std::size_t t = 0; t < irr.size(); ++t) irr[t] = irradiance(*srcLayout, src, out.direction(t)).value;
    return buildRadianceMipChain(std::move(irr), filter);
}

/// Anchors and their local cubemaps. Local cubemaps are constants for the
/// optimizer; they change only when rebuilt.
struct AnchorGrid {
    Aabb bbox;
    std::vector<Vec3d> anchors;
    std::vector<EnvCubeMipmap> localCubemaps;
    std::vector<EnvCubeMipmap> irradianceMaps;
    int resolution = kGridMapResolution;
    int levelCount = 0;
    int mipSamples = kDefaultMipSamples;
    AnchorWeighting weighting = AnchorWeighting::Literal;
    int refreshInterval = kGridMapRefreshInterval;
    long lastBuild = -1;
    double rayEpsilon = 0.0;

    bool built() const {
        return !localCubemaps.empty() && localCubemaps.size() == anchors.size() &&
               irradianceMaps.size() == anchors.size();
    }
};

/// Places anchors around `scene` and ray-traces every local cubemap.
inline void rebuildAnchorGrid(AnchorGrid& grid, const std::vector<SurfelGaussian>& scene, const EnvCubeMipmap& env) {
    grid.bbox = sceneBounds(scene);
    grid.anchors = placeAnchors(grid.bbox);
    grid.rayEpsilon = 1e-4 * grid.bbox.diagonal();
    const int levels = grid.levelCount > 0 ? grid.levelCount : defaultLevelCount(grid.resolution);
    auto filter = sharedMipFilter(grid.resolution, levels, grid.mipSamples);
    const SurfelTracer tracer(scene);
    const int irrRes = std::min(grid.resolution, kGridMapIrradianceResolution);
    std::vector<EnvCubeMipmap> maps(grid.anchors.size()), irr(grid.anchors.size());
    parallelFor(grid.anchors.size(), [&](std::size_t i) {
        maps[i] = buildRadianceMipChain(buildLocalCubemap(grid.anchors[i], scene, tracer, env, *filter->layouts[0]),
                                        filter);
        irr[i] = irradianceCube(maps[i], irrRes);
    });
    grid.localCubemaps = std::move(maps);
    grid.irradianceMaps = std::move(irr);
}

inline AnchorGrid buildAnchorGrid(const std::vector<SurfelGaussian>& scene, const EnvCubeMipmap& env,
                                  int resolution = kGridMapResolution,
                                  AnchorWeighting weighting = AnchorWeighting::Literal, long iteration = 0) {
    AnchorGrid grid;
    grid.resolution = resolution;
    grid.weighting = weighting;
    rebuildAnchorGrid(grid, scene, env);
    grid.lastBuild = iteration;
    return grid;
}

/// Rebuilds when never built, at iteration 0, or once `refreshInterval`
/// iterations have passed since the last build. Returns whether it rebuilt.
inline bool refreshIfStale(AnchorGrid& grid, const std::vector<SurfelGaussian>& scene, const EnvCubeMipmap& env,
                           long iteration) {
    const bool stale = iteration == 0 || grid.lastBuild < 0 || !grid.built() ||
                       iteration - grid.lastBuild >= grid.refreshInterval;
    if (!stale) return false;
    rebuildAnchorGrid(grid, scene, env);
    grid.lastBuild = iteration;
    return true;
}

/// Irradiance lifted to T through its Jacobian with respect to the normal.
template <typename T>
Vec3<T> liftIrradiance(const IrradianceResult& r, const Vec3<T>& n) {
    const std::array<T, 3> in{n.x, n.y, n.z};
    auto row = [&](int c) {
        return std::array<double, 3>{r.jacobian(c, 0), r.jacobian(c, 1), r.jacobian(c, 2)};
    };
    return {lift(r.value.x, row(0), in), lift(r.value.y, row(1), in), lift(r.value.z, row(2), in)};
}

/// Blend of the anchors' irradiance around `n` at point `p`.
template <typename T>
Vec3<T> localizedIrradiance(const AnchorGrid& grid, const Vec3<T>& p, const Vec3<T>& n) {
    const std::vector<T> w = anchorWeights(p, grid.anchors, grid.weighting);
    Vec3<T> acc{T(0.0), T(0.0), T(0.0)};
    T total(0.0);
    for (std::size_t i = 0; i < grid.anchors.size(); ++i) {
        acc += sampleLevel(grid.irradianceMaps[i], 0, n) * w[i];
        total += w[i];
    }
    return acc / total;
}

/// Blend of the local cubemaps' prefiltered radiance toward `dir`.
template <typename T>
Vec3<T> localizedSpecular(const AnchorGrid& grid, const Vec3<T>& p, const Vec3<T>& dir, const T& roughness) {
    const std::vector<T> w = anchorWeights(p, grid.anchors, grid.weighting);
    Vec3<T> acc{T(0.0), T(0.0), T(0.0)};
    T total(0.0);
    for (std::size_t i = 0; i < grid.anchors.size(); ++i) {
        acc += sampleEnv(grid.localCubemaps[i], dir, roughness) * w[i];
        total += w[i];
    }
    return acc / total;
}

}  // namespace polarsplat
