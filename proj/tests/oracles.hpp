#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "polarsplat/math.hpp"
#include "polarsplat/surfel.hpp"

namespace oracle {

using namespace polarsplat;

struct PlaneHit {
    double u, v, z;
};

// World-space ray/plane intersection; z is the camera depth of the hit.
inline std::optional<PlaneHit> rayPlane(const Camera& cam, int x, int y, const SurfelGaussian& g) {
    const Vec3d o = cam.center();
    const Vec3d d = normalize(cam.worldRay(x, y));
    const Vec3d n = g.normal();
    const double den = dot(d, n);
    if (std::abs(den) < 1e-14) return std::nullopt;
    const double t = dot(g.position - o, n) / den;
    if (t <= 0.0) return std::nullopt;
    const Vec3d h = o + d * t;
    const Vec3d rel = h - g.position;
    const double depth = dot(h - o, cam.axisZ());
    return PlaneHit{dot(rel, g.tangentU) / g.scaleU, dot(rel, g.tangentV) / g.scaleV, depth};
}

// Per-pixel blend that visits every surfel for every pixel (no screen-space
// culling), sorts its own hit list and composites front to back.
inline GBuffer bruteForceBlend(const std::vector<SurfelGaussian>& scene, const Camera& cam) {
    GBuffer gb(cam.width, cam.height);
    const Vec3d origin = cam.center();
    const Mat3d toWorld = cam.rotation.transposed();
    struct Hit {
        double z, u, v;
        std::size_t s;
    };
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            std::vector<Hit> hits;
            for (std::size_t s = 0; s < scene.size(); ++s) {
                if (scene[s].opacity <= 0.0) continue;
                const auto h = raySplatIntersect(cam, x, y, scene[s]);
                if (!h) continue;
                if (gaussianWeight(h->u, h->v) < 1.0 / 255.0) continue;
                hits.push_back({h->z, h->u, h->v, s});
            }
            std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
                return a.z < b.z || (a.z == b.z && a.s < b.s);
            });
            const std::size_t i = gb.index(x, y);
            const Vec3d ray = toWorld * cam.pixelRay(x, y);
            double trans = 1.0;
            for (const Hit& h : hits) {
                const SurfelGaussian& g = scene[h.s];
                const double alpha = g.opacity * gaussianWeight(h.u, h.v);
                const double w = trans * alpha;
                gb.albedo[i] += g.albedo * w;
                gb.normalSum[i] += g.normal() * w;
                gb.roughness[i] += g.roughness * w;
                gb.ior[i] += g.ior() * w;
                gb.depth[i] += h.z * w;
                gb.position[i] += (origin + ray * h.z) * w;
                gb.opacity[i] += w;
                trans *= 1.0 - alpha;
                if (trans < 1e-4) break;
            }
            const double len = length(gb.normalSum[i]);
            gb.normal[i] = (gb.opacity[i] > 0.0 && len > 1e-12) ? gb.normalSum[i] / len : Vec3d{};
        }
    return gb;
}

inline Vec3d randomUnit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (;;) {
        const Vec3d v{n(rng), n(rng), n(rng)};
        if (length(v) > 1e-6) return normalize(v);
    }
}

// Random surfels in front of a camera at the origin looking down +z.
inline std::vector<SurfelGaussian> randomScene(std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::vector<SurfelGaussian> scene;
    for (int i = 0; i < count; ++i) {
        SurfelGaussian g;
        g.position = {u01(rng) * 2.0 - 1.0, u01(rng) * 2.0 - 1.0, 3.0 + u01(rng) * 3.0};
        Vec3d n = randomUnit(rng);
        if (n.z > 0.0) n = -n;
        if (n.z > -0.2) n = normalize(n + Vec3d{0.0, 0.0, -0.5});
        const Vec3d helper = std::abs(n.x) < 0.9 ? Vec3d{1.0, 0.0, 0.0} : Vec3d{0.0, 1.0, 0.0};
        g.tangentU = normalize(cross(helper, n));
        g.tangentV = cross(n, g.tangentU);
        g.scaleU = 0.05 + 0.4 * u01(rng);
        g.scaleV = 0.05 + 0.4 * u01(rng);
        g.opacity = 0.1 + 0.89 * u01(rng);
        g.albedo = {u01(rng), u01(rng), u01(rng)};
        g.roughness = 0.08 + 0.92 * u01(rng);
        g.iorLatent = u01(rng) * 4.0 - 2.0;
        scene.push_back(g);
    }
    return scene;
}

inline Camera originCamera(int w, int h) {
    return Camera::lookAt({0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, -1.0, 0.0}, w, h, 0.9);
}

}  // namespace oracle
