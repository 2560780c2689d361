#pragma once

// Synthetic scenes: surfels sampled on analytic surfaces, procedural
// environments and camera rings. World up is +y.

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "polarsplat/activations.hpp"
#include "polarsplat/cubemap.hpp"
#include "polarsplat/math.hpp"
#include "polarsplat/sampling.hpp"
#include "polarsplat/surfel.hpp"

namespace polarsplat {

struct SurfelMaterial {
    Rgb albedo{0.5, 0.5, 0.5};
    double roughness = 0.3;
    double ior = 1.5;
    double opacity = 0.99;
};

/// Isotropic surfel at `p` facing `n`.
inline SurfelGaussian orientedSurfel(const Vec3d& p, const Vec3d& n, double scale, const SurfelMaterial& m) {
    SurfelGaussian g;
    g.position = p;
    tangentFrame(normalize(n), g.tangentU, g.tangentV);
    g.scaleU = g.scaleV = scale;
    g.opacity = m.opacity;
    g.albedo = m.albedo;
    g.roughness = m.roughness;
    g.iorLatent = iorActivationInverse(m.ior);
    return g;
}

/// Evenly spread unit vectors (golden-angle spiral).
inline std::vector<Vec3d> fibonacciSphere(int count) {
    std::vector<Vec3d> out;
    out.reserve(static_cast<std::size_t>(count));
    const double golden = kPi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double y = 1.0 - 2.0 * (i + 0.5) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - y * y));
        const double a = golden * i;
        out.push_back({r * std::cos(a), y, r * std::sin(a)});
    }
    return out;
}

/// Surfel scale giving overlapping coverage when `count` surfels share `area`.
inline double coverageScale(double area, int count) { return 0.65 * std::sqrt(area / count); }

/// Closed sphere with outward normals.
inline std::vector<SurfelGaussian> sphereSurfels(int count, double radius, const Vec3d& center,
                                                 const SurfelMaterial& m) {
    if (count < 1 || !(radius > 0.0)) throw std::invalid_argument("sphere needs surfels and a positive radius");
    const double s = coverageScale(4.0 * kPi * radius * radius, count);
    std::vector<SurfelGaussian> out;
    for (const Vec3d& d : fibonacciSphere(count)) out.push_back(orientedSurfel(center + d * radius, d, s, m));
    return out;
}

/// Lower hemisphere of a sphere opening toward +y, as a two-sided shell: an
/// inner layer facing the center and an outer layer `thickness` further out.
/// `count` surfels per layer.
inline std::vector<SurfelGaussian> bowlSurfels(int count, double radius, const Vec3d& center, const SurfelMaterial& m,
                                               double thickness = 0.0) {
    if (count < 1 || !(radius > 0.0)) throw std::invalid_argument("bowl needs surfels and a positive radius");
    if (thickness <= 0.0) thickness = 0.02 * radius;
    std::vector<SurfelGaussian> out;
    const double sIn = coverageScale(2.0 * kPi * radius * radius, count);
    const double sOut = coverageScale(2.0 * kPi * sqr(radius + thickness), count);
    for (const Vec3d& d : fibonacciSphere(2 * count)) {
        if (d.y >= 0.0) continue;
        out.push_back(orientedSurfel(center + d * radius, -d, sIn, m));
        out.push_back(orientedSurfel(center + d * (radius + thickness), d, sOut, m));
    }
    return out;
}

/// Rectangle origin + a * axisU + b * axisV for a, b in [0, 1], sampled on a
/// countU x countV grid, facing axisU x axisV.
inline std::vector<SurfelGaussian> planeSurfels(const Vec3d& origin, const Vec3d& axisU, const Vec3d& axisV,
                                                int countU, int countV, const SurfelMaterial& m) {
    if (countU < 1 || countV < 1) throw std::invalid_argument("plane needs surfels");
    const Vec3d n = normalize(cross(axisU, axisV));
    const double s = coverageScale(length(cross(axisU, axisV)), countU * countV);
    std::vector<SurfelGaussian> out;
    for (int j = 0; j < countV; ++j)
        for (int i = 0; i < countU; ++i) {
            const Vec3d p = origin + axisU * ((i + 0.5) / countU) + axisV * ((j + 0.5) / countV);
            SurfelGaussian g = orientedSurfel(p, n, s, m);
            g.tangentU = normalize(axisU);
            g.tangentV = cross(n, g.tangentU);
            out.push_back(g);
        }
    return out;
}

/// Floor (y = 0, facing +y) meeting a back wall (z = -size/2, facing +z).
inline std::vector<SurfelGaussian> cornerSurfels(int perSide, double size, const SurfelMaterial& m) {
    const double h = 0.5 * size;
    auto floor = planeSurfels({-h, 0.0, h}, {size, 0.0, 0.0}, {0.0, 0.0, -size}, perSide, perSide, m);
    const auto wall = planeSurfels({-h, 0.0, -h}, {size, 0.0, 0.0}, {0.0, size, 0.0}, perSide, perSide, m);
    floor.insert(floor.end(), wall.begin(), wall.end());
    return floor;
}

enum class Primitive { Sphere, Bowl, Corner };

inline Primitive parsePrimitive(const std::string& name) {
    if (name == "sphere") return Primitive::Sphere;
    if (name == "bowl") return Primitive::Bowl;
    if (name == "corner") return Primitive::Corner;
    throw std::invalid_argument("unknown primitive: " + name);
}

inline const char* primitiveName(Primitive p) {
    switch (p) {
        case Primitive::Sphere: return "sphere";
        case Primitive::Bowl: return "bowl";
        case Primitive::Corner: return "corner";
    }
    return "sphere";
}

/// Unit-scale primitive centered at the origin.
inline std::vector<SurfelGaussian> primitiveSurfels(Primitive p, int count, const SurfelMaterial& m) {
    switch (p) {
        case Primitive::Sphere: return sphereSurfels(count, 1.0, {}, m);
        case Primitive::Bowl: return bowlSurfels(std::max(1, count / 2), 1.0, {0.0, 0.5, 0.0}, m);
        case Primitive::Corner: {
            const int side = std::max(1, static_cast<int>(std::lround(std::sqrt(count / 2.0))));
            return cornerSurfels(side, 2.0, m);
        }
    }
    return {};
}

/// Latents of a radiance cube given per direction.
template <typename F>
std::vector<Rgb> environmentLatents(int resolution, F&& radiance) {
    const CubeLayout layout(resolution);
    std::vector<Rgb> lat(layout.texelCount());
    for (std::size_t t = 0; t < lat.size(); ++t) {
        const Rgb r = radiance(layout.direction(t));
        lat[t] = {envActivationInverse(r.x), envActivationInverse(r.y), envActivationInverse(r.z)};
    }
    return lat;
}

/// Smooth random sky: a dim colored floor plus a few random colored lobes.
inline std::vector<Rgb> randomEnvironment(int resolution, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    struct Lobe {
        Vec3d dir;
        Rgb color;
        double sharpness;
    };
    std::vector<Lobe> lobes;
    for (int k = 0; k < 6; ++k) {
        Vec3d d{gauss(rng), gauss(rng), gauss(rng)};
        d = normalize(d);
        lobes.push_back({d, {0.3 + 1.2 * u01(rng), 0.3 + 1.2 * u01(rng), 0.3 + 1.2 * u01(rng)}, 2.0 + 10.0 * u01(rng)});
    }
    const Rgb floor{0.15 + 0.1 * u01(rng), 0.15 + 0.1 * u01(rng), 0.15 + 0.1 * u01(rng)};
    return environmentLatents(resolution, [&](const Vec3d& d) {
        Rgb r = floor;
        for (const Lobe& l : lobes) r += l.color * std::exp(l.sharpness * (dot(d, l.dir) - 1.0));
        return r;
    });
}

/// Radiance `top` above the horizon (y > 0) and `bottom` below.
inline std::vector<Rgb> hemisphereEnvironment(int resolution, const Rgb& top, const Rgb& bottom) {
    return environmentLatents(resolution, [&](const Vec3d& d) { return d.y > 0.0 ? top : bottom; });
}

inline std::vector<Rgb> constantEnvironment(int resolution, const Rgb& radiance) {
    return environmentLatents(resolution, [&](const Vec3d&) { return radiance; });
}

/// `count` cameras evenly spaced on a horizontal ring of `distance` around
/// `target`, raised by `elevation` radians, all looking at `target`.
inline std::vector<Camera> cameraRing(int count, double distance, double elevation, const Vec3d& target, int width,
                                      int height, double fovY) {
    std::vector<Camera> out;
    for (int i = 0; i < count; ++i) {
        const double a = 2.0 * kPi * i / count;
        const Vec3d eye = target + Vec3d{std::cos(elevation) * std::cos(a), std::sin(elevation),
                                         std::cos(elevation) * std::sin(a)} *
                                       distance;
        out.push_back(Camera::lookAt(eye, target, {0.0, 1.0, 0.0}, width, height, fovY));
    }
    return out;
}

}  // namespace polarsplat
