#pragma once

// Polarimetric deferred shading. Per shaded pixel the G-buffer means give the
// normal, albedo, roughness and index of refraction; specular radiance uses
// the split-sum approximation and diffuse radiance the irradiance of the
// environment. Each component is then polarized with the Fresnel factor of the
// zenith angle and the azimuth of the normal in the image plane.

#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "polarsplat/envlight.hpp"
#include "polarsplat/errors.hpp"
#include "polarsplat/gridmap.hpp"
#include "polarsplat/math.hpp"
#include "polarsplat/parallel.hpp"
#include "polarsplat/polcore.hpp"
#include "polarsplat/raycast.hpp"
#include "polarsplat/surfel.hpp"

namespace polarsplat {

/// Pixels with accumulated opacity below this are not shaded.
inline constexpr double kShadeOpacityThreshold = 0.5;

enum class StokesComponent { Total, Diffuse, Specular };

struct StokesImage {
    int width = 0;
    int height = 0;
    StokesComponent component = StokesComponent::Total;
    std::vector<SpectralStokes> pixels;

    StokesImage() = default;
    StokesImage(int w, int h, StokesComponent c)
        : width(w), height(h), component(c), pixels(static_cast<std::size_t>(w) * h) {}

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    SpectralStokes& at(int x, int y) { return pixels[index(x, y)]; }
    const SpectralStokes& at(int x, int y) const { return pixels[index(x, y)]; }
};

struct ShadingGeometry {
    Vec3d n;
    Vec3d omegaO;
    double thetaN = 0.0;
    double phiN = 0.0;
};

/// Zenith cosine and double-angle azimuth terms, differentiable in T.
template <typename T>
struct PolarAngles {
    T cosTheta;
    T cos2Phi;
    T sin2Phi;
};

/// Returns nullopt for back-facing normals. The azimuth is measured from
/// +y_cam toward +x_cam, phi = atan2(n . x_cam, n . y_cam).
template <typename T>
std::optional<PolarAngles<T>> polarAngles(const Vec3<T>& n, const Vec3<T>& omegaO, const Camera& cam) {
    const T c = dot(n, omegaO);
    if (!(value(c) > 0.0)) return std::nullopt;
    const T nx = dot(n, Vec3<T>(cam.axisX()));
    const T ny = dot(n, Vec3<T>(cam.axisY()));
    const T r2 = nx * nx + ny * ny;
    PolarAngles<T> a{c, T(1.0), T(0.0)};
    if (value(r2) > 1e-24) {
        a.cos2Phi = (ny * ny - nx * nx) / r2;
        a.sin2Phi = 2.0 * nx * ny / r2;
    }
    return a;
}

inline std::optional<ShadingGeometry> shadingGeometry(const Vec3d& n, const Vec3d& position, const Camera& cam) {
    const Vec3d omegaO = normalize(cam.center() - position);
    const double c = dot(n, omegaO);
    if (!(c > 0.0)) return std::nullopt;
    ShadingGeometry g;
    g.n = n;
    g.omegaO = omegaO;
    g.thetaN = std::acos(std::min(1.0, c));
    g.phiN = std::atan2(dot(n, cam.axisX()), dot(n, cam.axisY()));
    return g;
}

/// Geometry of G-buffer pixel `i`; nullopt for unshaded or back-facing pixels.
inline std::optional<ShadingGeometry> shadingGeometry(const GBuffer& gb, std::size_t i, const Camera& cam) {
    if (gb.opacity[i] < kShadeOpacityThreshold || !(length(gb.normal[i]) > 0.0)) return std::nullopt;
    return shadingGeometry(gb.normal[i], gb.meanPosition(i), cam);
}

inline PolarAngles<double> polarAngles(const ShadingGeometry& g) {
    return {dot(g.n, g.omegaO), std::cos(2.0 * g.phiN), std::sin(2.0 * g.phiN)};
}

template <typename T>
T fresnelF0(const T& eta) {
    return sqr((1.0 - eta) / (1.0 + eta));
}

template <typename T>
T schlick(const T& f0, const T& cosTheta) {
    using std::pow;
    const double m = 1.0 - value(cosTheta);
    if (!(m > 0.0)) return f0;
    return f0 + (1.0 - f0) * pow(1.0 - cosTheta, 5.0);
}

/// Split-sum directional albedo F0 * tau0 + tau1.
template <typename T>
T specularAlbedo(const SplitSumLUT& lut, const T& cosTheta, const T& roughness, const T& eta) {
    const std::array<T, 2> tau = lut.lookup(cosTheta, roughness);
    return fresnelF0(eta) * tau[0] + tau[1];
}

inline Rgb specularRadiance(const ShadingGeometry& g, double roughness, double eta, const EnvCubeMipmap& env,
                            const SplitSumLUT& lut) {
    const double c = dot(g.n, g.omegaO);
    return sampleEnv(env, reflect(g.omegaO, g.n), roughness) * specularAlbedo(lut, c, roughness, eta);
}

inline Rgb diffuseRadiance(const ShadingGeometry& g, const Rgb& albedo, double eta, const EnvCubeMipmap& env) {
    const double f = schlick(fresnelF0(eta), dot(g.n, g.omegaO));
    return hadamard(albedo, diffuseIrradiance(env, g.n)) * ((1.0 - f) * kInvPi);
}

/// [L, beta cos2phi L, -beta sin2phi L] per channel; s3 is zero.
template <typename T>
std::array<Vec3<T>, 3> polarize(const Vec3<T>& radiance, const T& beta, const PolarAngles<T>& a) {
    return {radiance, radiance * (beta * a.cos2Phi), radiance * (-beta * a.sin2Phi)};
}

inline SpectralStokes toStokes(const std::array<Rgb, 3>& s) { return {s[0], s[1], s[2], Rgb{}}; }

inline SpectralStokes polarizeSpecular(const Rgb& ls, const ShadingGeometry& g, double eta) {
    const PolarAngles<double> a = polarAngles(g);
    return toStokes(polarize(ls, betaSpec(fresnel(eta, a.cosTheta)), a));
}

inline SpectralStokes polarizeDiffuse(const Rgb& ld, const ShadingGeometry& g, double eta) {
    const PolarAngles<double> a = polarAngles(g);
    return toStokes(polarize(ld, betaDiff(fresnel(eta, a.cosTheta)), a));
}

/// Lighting shared by all pixels of one render. `grid` and `tracer` are both
/// set or both null.
struct Lighting {
    const EnvCubeMipmap* env = nullptr;
    const SplitSumLUT* lut = nullptr;
    const AnchorGrid* grid = nullptr;
    const SurfelTracer* tracer = nullptr;
};

/// Per-pixel shading inputs (normalized G-buffer values).
template <typename T>
struct PixelInputs {
    Vec3<T> albedo;
    Vec3<T> normal;
    Vec3<T> position;
    T roughness;
    T ior;
};

template <typename T>
struct PixelStokes {
    std::array<Vec3<T>, 3> diffuse;
    std::array<Vec3<T>, 3> specular;
};

/// Values the environment adjoint needs from one shaded pixel.
struct ShadeRecord {
    double specularScale = 0.0;  // split-sum albedo
    Rgb diffuseScale;            // (1 - F) albedo / pi
    double betaS = 0.0, betaD = 0.0;
    double cos2Phi = 1.0, sin2Phi = 0.0;
    Vec3d normal;
    EnvFootprint footprint;
    bool specularFromEnv = true;
    bool diffuseFromEnv = true;
};

/// Shades one pixel; returns false when it faces away from the camera.
template <typename T>
bool shadePixel(const PixelInputs<T>& in, const Camera& cam, const Lighting& light, PixelStokes<T>& out,
                ShadeRecord* rec = nullptr) {
    const Vec3<T> omegaO = normalize(Vec3<T>(cam.center()) - in.position);
    const std::optional<PolarAngles<T>> a = polarAngles(in.normal, omegaO, cam);
    if (!a) return false;
    const FresnelSet<T> f = fresnel(in.ior, a->cosTheta);
    const T betaS = betaSpec(f);
    const T betaD = betaDiff(f);

    const Vec3<T> omegaR = reflect(omegaO, in.normal);
    const T kS = specularAlbedo(*light.lut, a->cosTheta, in.roughness, in.ior);
    const Vec3d nv{value(in.normal.x), value(in.normal.y), value(in.normal.z)};
    const Vec3d pv{value(in.position.x), value(in.position.y), value(in.position.z)};

    bool specFromEnv = true;
    if (light.grid) {
        const Vec3d rv{value(omegaR.x), value(omegaR.y), value(omegaR.z)};
        specFromEnv = visibility(pv, nv, normalize(rv), *light.tracer, light.grid->rayEpsilon);
    }
    Vec3<T> envSpec;
    if (specFromEnv) {
        envSpec = sampleEnv(*light.env, omegaR, in.roughness, rec ? &rec->footprint : nullptr);
    } else {
        envSpec = localizedSpecular(*light.grid, in.position, omegaR, in.roughness);
        if (rec) rec->footprint.count = 0;
    }

    Vec3<T> irr;
    if (light.grid) {
        irr = localizedIrradiance(*light.grid, in.position, in.normal);
    } else {
        const IrradianceResult r =
            irradiance(light.env->layout(0), light.env->base(), nv, !std::is_same_v<T, double>);
        irr = liftIrradiance(r, in.normal);
    }
    const T kD = (1.0 - schlick(fresnelF0(in.ior), a->cosTheta)) * kInvPi;
    const Vec3<T> diffScale = in.albedo * kD;

    out.specular = polarize(envSpec * kS, betaS, *a);
    out.diffuse = polarize(hadamard(diffScale, irr), betaD, *a);

    if (rec) {
        rec->specularScale = value(kS);
        rec->diffuseScale = {value(diffScale.x), value(diffScale.y), value(diffScale.z)};
        rec->betaS = value(betaS);
        rec->betaD = value(betaD);
        rec->cos2Phi = value(a->cos2Phi);
        rec->sin2Phi = value(a->sin2Phi);
        rec->normal = nv;
        rec->specularFromEnv = specFromEnv;
        rec->diffuseFromEnv = light.grid == nullptr;
    }
    return true;
}

/// Normalized shading inputs of G-buffer pixel `i`.
inline PixelInputs<double> pixelInputs(const GBuffer& gb, std::size_t i) {
    return {gb.meanAlbedo(i), gb.normal[i], gb.meanPosition(i), gb.meanRoughness(i), gb.meanIor(i)};
}

inline bool isShadedPixel(const GBuffer& gb, std::size_t i) {
    return gb.opacity[i] >= kShadeOpacityThreshold && length(gb.normal[i]) > 0.0;
}

struct PolarRender {
    StokesImage total;
    StokesImage diffuse;
    StokesImage specular;
    GBuffer gbuffer;
    std::vector<unsigned char> shaded;
    std::vector<ShadeRecord> records;  // filled when requested
};

/// Shades an already rasterized G-buffer.
inline PolarRender shadeGBuffer(GBuffer gb, const Camera& cam, const Lighting& light, bool keepRecords = false) {
    if (!light.lut || light.lut->empty()) throw ConfigError("split-sum LUT missing");
    if (!light.env || light.env->levels.empty()) throw ConfigError("environment map missing");
    PolarRender r;
    r.total = StokesImage(gb.width, gb.height, StokesComponent::Total);
    r.diffuse = StokesImage(gb.width, gb.height, StokesComponent::Diffuse);
    r.specular = StokesImage(gb.width, gb.height, StokesComponent::Specular);
    r.shaded.assign(gb.size(), 0);
    if (keepRecords) r.records.resize(gb.size());
    parallelFor(gb.size(), [&](std::size_t i) {
        if (!isShadedPixel(gb, i)) return;
        PixelStokes<double> s;
        if (!shadePixel(pixelInputs(gb, i), cam, light, s, keepRecords ? &r.records[i] : nullptr)) return;
        r.shaded[i] = 1;
        r.diffuse.pixels[i] = toStokes(s.diffuse);
        r.specular.pixels[i] = toStokes(s.specular);
        r.total.pixels[i] = r.diffuse.pixels[i] + r.specular.pixels[i];
    });
    r.gbuffer = std::move(gb);
    return r;
}

/// Rasterizes `scene` and shades every pixel. With a grid, diffuse lighting
/// comes from the local cubemaps everywhere and specular lighting only where
/// the reflected ray is blocked by the object.
inline PolarRender renderPolar(const std::vector<SurfelGaussian>& scene, const Camera& cam, const EnvCubeMipmap& env,
                               const SplitSumLUT* lut, const AnchorGrid* grid = nullptr, bool keepRecords = false) {
    if (!lut || lut->empty()) throw ConfigError("split-sum LUT missing");
    if (grid && !grid->built()) throw ConfigError("anchor grid not built");
    std::optional<SurfelTracer> tracer;
    Lighting light{&env, lut, nullptr, nullptr};
    if (grid) {
        tracer.emplace(scene);
        light.grid = grid;
        light.tracer = &*tracer;
    }
    return shadeGBuffer(rasterize(scene, cam), cam, light, keepRecords);
}

/// Intensity behind an ideal linear polarizer at angle theta.
inline Image<Rgb> simulateLPCapture(const StokesImage& img, double theta) {
    Image<Rgb> out(img.width, img.height);
    const double c = std::cos(2.0 * theta), s = std::sin(2.0 * theta);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const SpectralStokes& p = img.pixels[i];
        out.pixels[i] = (p.s0 + p.s1 * c + p.s2 * s) * 0.5;
    }
    return out;
}

}  // namespace polarsplat
