#pragma once

// Environment lighting: latent cube map with a roughness-indexed prefiltered
// mip chain, hemispherical diffuse irradiance, and the split-sum BRDF table.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "polarsplat/activations.hpp"
#include "polarsplat/cubemap.hpp"
#include "polarsplat/math.hpp"
#include "polarsplat/sampling.hpp"

namespace polarsplat {

inline constexpr int kDefaultEnvLevels = 5;
inline constexpr int kDefaultMipSamples = 512;

/// Geometric roughness schedule from 0.08 (base) to 1.0 over `levels` levels.
inline std::vector<double> mipRoughnessSchedule(int levels) {
    if (levels < 1) throw std::invalid_argument("mip chain needs at least one level");
    std::vector<double> r(static_cast<std::size_t>(levels));
    for (int l = 0; l < levels; ++l)
        r[static_cast<std::size_t>(l)] =
            levels == 1 ? kRoughnessMin : kRoughnessMin * std::pow(1.0 / kRoughnessMin, double(l) / (levels - 1));
    return r;
}

inline int defaultLevelCount(int baseResolution) {
    int levels = 1;
    for (int res = baseResolution; res > 1 && levels < kDefaultEnvLevels; res /= 2) ++levels;
    return levels;
}

/// Calls f(coarse texel, fine texel, weight) for the 2x2 children of every
/// texel of `cl` (half the resolution of `fl`); weights are solid-angle
/// fractions and sum to 1 per coarse texel.
template <class F>
void forEachBoxChild(const CubeLayout& fl, const CubeLayout& cl, F&& f) {
    for (int face = 0; face < kCubeFaces; ++face)
        for (int j = 0; j < cl.resolution; ++j)
            for (int i = 0; i < cl.resolution; ++i) {
                const std::size_t c = cl.texelIndex(face, i, j);
                const std::size_t kids[4] = {fl.texelIndex(face, 2 * i, 2 * j), fl.texelIndex(face, 2 * i + 1, 2 * j),
                                             fl.texelIndex(face, 2 * i, 2 * j + 1),
                                             fl.texelIndex(face, 2 * i + 1, 2 * j + 1)};
                double total = 0.0;
                for (std::size_t k : kids) total += fl.solidAngle[k];
                for (std::size_t k : kids) f(c, k, fl.solidAngle[k] / total);
            }
}

/// Solid-angle weighted 2x2 reduction of a cube map.
inline std::vector<Rgb> boxReduce(const CubeLayout& fl, const CubeLayout& cl, const std::vector<Rgb>& fine) {
    std::vector<Rgb> coarse(cl.texelCount(), Rgb{});
    forEachBoxChild(fl, cl, [&](std::size_t c, std::size_t f, double w) { coarse[c] += fine[f] * w; });
    return coarse;
}

/// Row-compressed linear map from one source map to one mip level.
struct SparseRows {
    std::vector<std::uint32_t> rowStart{0};
    std::vector<std::uint32_t> column;
    std::vector<double> weight;

    std::size_t rows() const { return rowStart.size() - 1; }
};

/// The GGX prefiltering operator of a mip chain. A level l (l >= 1) texel is
/// the average over its footprint (weighted by the cube area element) of
///   integral B(l) K(n, l) dl / integral K(n, l) dl,  K = D(h) (n . l)+
/// with h = normalize(n + l), alpha = r_l^2 and B the texel-constant base map:
/// the split-sum prefilter. Wide lobes are integrated by a gather over the
/// texel centers of a solid-angle box reduction of the base (`source[l]`,
/// texels at most half the lobe width) with the kernel cut at 2 atan(16 alpha).
/// Lobes narrower than that use GGX importance samples (`samples` per texel,
/// at least 128 per footprint point) on a footprint grid four times finer
/// than the base texels.
struct MipFilter {
    int baseResolution = 0;
    int samples = 0;
    std::vector<double> roughness;
    std::vector<std::shared_ptr<const CubeLayout>> layouts;
    std::vector<SparseRows> levels;  // index 0 unused (identity)
    std::vector<int> source;         // box level each mip level reads

    int levelCount() const { return static_cast<int>(roughness.size()); }

    /// Solid-angle weighted 2x2 reduction from box level k - 1 to k.
    void boxDown(const std::vector<Rgb>& fine, int k, std::vector<Rgb>& coarse) const {
        coarse = boxReduce(*layouts[static_cast<std::size_t>(k - 1)], *layouts[static_cast<std::size_t>(k)], fine);
    }

    void apply(const std::vector<Rgb>& base, std::vector<std::vector<Rgb>>& out) const {
        out.resize(roughness.size());
        out[0] = base;
        std::vector<std::vector<Rgb>> box(static_cast<std::size_t>(maxSource()) + 1);
        box[0] = base;
        for (int k = 1; k <= maxSource(); ++k) boxDown(box[static_cast<std::size_t>(k - 1)], k, box[static_cast<std::size_t>(k)]);
        for (std::size_t l = 1; l < levels.size(); ++l) {
            const SparseRows& m = levels[l];
            const std::vector<Rgb>& src = box[static_cast<std::size_t>(source[l])];
            out[l].assign(m.rows(), Rgb{});
            for (std::size_t r = 0; r < m.rows(); ++r) {
                Rgb acc{};
                for (std::uint32_t k = m.rowStart[r]; k < m.rowStart[r + 1]; ++k) acc += src[m.column[k]] * m.weight[k];
                out[l][r] = acc;
            }
        }
    }

    /// Adds the transpose of every level map to `baseGrad`.
    void backward(const std::vector<std::vector<Rgb>>& levelGrad, std::vector<Rgb>& baseGrad) const {
        baseGrad.resize(layouts[0]->texelCount());
        for (std::size_t t = 0; t < baseGrad.size(); ++t) baseGrad[t] += levelGrad[0][t];
        std::vector<std::vector<Rgb>> boxGrad(static_cast<std::size_t>(maxSource()) + 1);
        for (int k = 0; k <= maxSource(); ++k)
            boxGrad[static_cast<std::size_t>(k)].assign(layouts[static_cast<std::size_t>(k)]->texelCount(), Rgb{});
        for (std::size_t l = 1; l < levels.size(); ++l) {
            const SparseRows& m = levels[l];
            std::vector<Rgb>& g = boxGrad[static_cast<std::size_t>(source[l])];
            for (std::size_t r = 0; r < m.rows(); ++r) {
                const Rgb d = levelGrad[l][r];
                if (d.x == 0.0 && d.y == 0.0 && d.z == 0.0) continue;
                for (std::uint32_t k = m.rowStart[r]; k < m.rowStart[r + 1]; ++k) g[m.column[k]] += d * m.weight[k];
            }
        }
        for (int k = maxSource(); k >= 1; --k) {
            const auto& coarse = boxGrad[static_cast<std::size_t>(k)];
            auto& fine = boxGrad[static_cast<std::size_t>(k - 1)];
            forEachBoxChild(*layouts[static_cast<std::size_t>(k - 1)], *layouts[static_cast<std::size_t>(k)],
                            [&](std::size_t c, std::size_t f, double w) { fine[f] += coarse[c] * w; });
        }
        for (std::size_t t = 0; t < baseGrad.size(); ++t) baseGrad[t] += boxGrad[0][t];
    }

private:
    int maxSource() const { return source.empty() ? 0 : *std::max_element(source.begin(), source.end()); }
};

namespace detail {

// Angle containing 90% of the GGX reflected-direction mass.
inline double lobeAngle(double alpha) { return 2.0 * std::atan(3.0 * alpha); }

// Accumulates one footprint point's row weights into `accum`.
struct FilterAccumulator {
    std::vector<double>& accum;
    std::vector<std::uint32_t>& touched;
    double total = 0.0;

    void add(std::uint32_t col, double w) {
        if (accum[col] == 0.0) touched.push_back(col);
        accum[col] += w;
        total += w;
    }
};

inline void gatherLobe(const CubeLayout& base, const Vec3d& n, double alpha, double area, FilterAccumulator& acc) {
    const double cut = std::min(kPi / 2, 2.0 * std::atan(16.0 * alpha));
    const double cosCut = std::cos(cut);
    const double faceSpread = std::acos(1.0 / std::sqrt(3.0));
    const std::size_t perFace = static_cast<std::size_t>(base.resolution) * base.resolution;
    for (int face = 0; face < kCubeFaces; ++face) {
        const double toCenter = std::acos(std::clamp(dot(n, cubeFaceDirection(face, 0.0, 0.0)), -1.0, 1.0));
        if (toCenter > cut + faceSpread) continue;
        const std::size_t begin = perFace * static_cast<std::size_t>(face);
        for (std::size_t t = begin; t < begin + perFace; ++t) {
            const Vec3d l{base.dirX[t], base.dirY[t], base.dirZ[t]};
            const double nDotL = dot(n, l);
            if (nDotL <= cosCut || nDotL <= 0.0) continue;
            const double nDotH = std::sqrt(0.5 * (1.0 + nDotL));
            const double w = ggxDistribution(nDotH, alpha) * nDotL * base.solidAngle[t] * area;
            if (w > 0.0) acc.add(static_cast<std::uint32_t>(t), w);
        }
    }
}

inline void sampleLobe(const CubeLayout& base, const Vec3d& n, const Vec3d& faceUp, double alpha, double area,
                       int samples, double spin, FilterAccumulator& acc) {
    // The face's own up axis is never parallel to a normal on that face, so
    // the frame varies smoothly across the footprint.
    const Vec3d tx = normalize(cross(faceUp, n));
    const Vec3d ty = cross(n, tx);
    for (int s = 0; s < samples; ++s) {
        Sample2 u = hammersley(static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(samples));
        u.u += spin;
        u.u -= std::floor(u.u);
        const Vec3d hl = sampleGgxHalfVector(u, alpha);
        const Vec3d h = tx * hl.x + ty * hl.y + n * hl.z;
        const Vec3d dir = reflect(n, h);
        const double nDotL = dot(n, dir);
        if (nDotL <= 0.0) continue;
        acc.add(static_cast<std::uint32_t>(base.nearestTexel(dir)), nDotL * area);
    }
}

}  // namespace detail

inline std::shared_ptr<const MipFilter> buildMipFilter(int baseResolution, int levelCount, int samples) {
    if (baseResolution < 1) throw std::invalid_argument("mip base resolution must be positive");
    if ((baseResolution >> (levelCount - 1)) < 1) throw std::invalid_argument("too many mip levels for resolution");
    if (samples < 1) throw std::invalid_argument("mip filter needs samples");
    auto f = std::make_shared<MipFilter>();
    f->baseResolution = baseResolution;
    f->samples = samples;
    f->roughness = mipRoughnessSchedule(levelCount);
    f->levels.resize(static_cast<std::size_t>(levelCount));
    for (int l = 0; l < levelCount; ++l) f->layouts.push_back(makeCubeLayout(baseResolution >> l));
    f->source.assign(static_cast<std::size_t>(levelCount), 0);
    std::vector<double> accum;
    std::vector<std::uint32_t> touched;
    for (int l = 1; l < levelCount; ++l) {
        const double alpha = sqr(f->roughness[static_cast<std::size_t>(l)]);
        const double lobe = detail::lobeAngle(alpha);
        const CubeLayout& layout = *f->layouts[static_cast<std::size_t>(l)];
        SparseRows& rows = f->levels[static_cast<std::size_t>(l)];
        const int res = layout.resolution;
        int k = 0;
        while (k < l && 2.0 / (baseResolution >> (k + 1)) <= 0.1667 * lobe) ++k;
        const bool gather = 2.0 / (baseResolution >> k) <= 0.1667 * lobe;
        f->source[static_cast<std::size_t>(l)] = k;
        const CubeLayout& src = *f->layouts[static_cast<std::size_t>(k)];
        accum.assign(src.texelCount(), 0.0);
        // Footprint spacing: a quarter of the lobe for gathers (and at least 8
        // points per face side), a quarter base texel for sampled lobes.
        const int foot = gather ? std::max({2, (8 + res - 1) / res, static_cast<int>(std::ceil(8.0 / (res * lobe)))})
                                : 4 * (baseResolution / res);
        const int lobeSamples = std::max(128, samples / (foot * foot));
        for (std::size_t t = 0; t < layout.texelCount(); ++t) {
            const int face = static_cast<int>(t / (static_cast<std::size_t>(res) * res));
            const int j = static_cast<int>(t / res % res);
            const int i = static_cast<int>(t % res);
            const Vec3d faceUp = cubeFaceDirection(face, 0.0, 1.0) - cubeFaceDirection(face, 0.0, 0.0);
            detail::FilterAccumulator acc{accum, touched};
            for (int fj = 0; fj < foot; ++fj)
                for (int fi = 0; fi < foot; ++fi) {
                    const double a = 2.0 * (i + (fi + 0.5) / foot) / res - 1.0;
                    const double b = 2.0 * (j + (fj + 0.5) / foot) / res - 1.0;
                    const double area = std::pow(1.0 + a * a + b * b, -1.5);
                    const Vec3d n = normalize(cubeFaceDirection(face, a, b));
                    if (gather)
                        detail::gatherLobe(src, n, alpha, area, acc);
                    else
                        detail::sampleLobe(src, n, faceUp, alpha, area, lobeSamples,
                                           0.6180339887498949 * (fj * foot + fi), acc);
                }
            std::sort(touched.begin(), touched.end());
            for (std::uint32_t col : touched) {
                rows.column.push_back(col);
                rows.weight.push_back(accum[col] / acc.total);
                accum[col] = 0.0;
            }
            touched.clear();
            rows.rowStart.push_back(static_cast<std::uint32_t>(rows.column.size()));
        }
    }
    return f;
}

/// Process-wide cache of filters keyed by (resolution, levels, samples).
inline std::shared_ptr<const MipFilter> sharedMipFilter(int baseResolution, int levelCount, int samples) {
    static std::mutex mutex;
    static std::map<std::tuple<int, int, int>, std::shared_ptr<const MipFilter>> cache;
    std::lock_guard<std::mutex> lock(mutex);
    auto key = std::make_tuple(baseResolution, levelCount, samples);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    auto f = buildMipFilter(baseResolution, levelCount, samples);
    cache.emplace(key, f);
    return f;
}

/// Cube mip chain of radiance. Global environments also carry the base-level
/// latents they were activated from; local (GridMap) cubemaps carry none.
struct EnvCubeMipmap {
    int baseResolution = 0;
    std::vector<double> levelRoughness;
    std::vector<Rgb> latents;
    std::vector<std::vector<Rgb>> levels;
    std::shared_ptr<const MipFilter> filter;

    int levelCount() const { return static_cast<int>(levels.size()); }
    const CubeLayout& layout(int level = 0) const { return *filter->layouts[static_cast<std::size_t>(level)]; }
    const std::vector<Rgb>& base() const { return levels[0]; }
    bool hasLatents() const { return !latents.empty(); }

    /// Re-activates the latents and refilters every level.
    void setLatents(std::vector<Rgb> newLatents) {
        if (newLatents.size() != layout(0).texelCount()) throw std::invalid_argument("latent count mismatch");
        latents = std::move(newLatents);
        std::vector<Rgb> radiance(latents.size());
        for (std::size_t t = 0; t < latents.size(); ++t)
            radiance[t] = {envActivation(latents[t].x), envActivation(latents[t].y), envActivation(latents[t].z)};
        filter->apply(radiance, levels);
    }
};

inline void checkEnvResolution(int baseResolution) {
    if (baseResolution < 8 || (baseResolution & (baseResolution - 1)) != 0)
        throw std::invalid_argument("environment base resolution must be a power of two >= 8");
}

/// Builds the mip chain from base-level latents (6 * D0^2 texels, face-major).
inline EnvCubeMipmap buildMipChain(int baseResolution, std::vector<Rgb> latents, int levelCount = 0,
                                   int samples = kDefaultMipSamples) {
    checkEnvResolution(baseResolution);
    if (levelCount <= 0) levelCount = defaultLevelCount(baseResolution);
    EnvCubeMipmap env;
    env.baseResolution = baseResolution;
    env.filter = sharedMipFilter(baseResolution, levelCount, samples);
    env.levelRoughness = env.filter->roughness;
    env.setLatents(std::move(latents));
    return env;
}

/// Mip chain over radiance with no latents (used for local cubemaps).
inline EnvCubeMipmap buildRadianceMipChain(std::vector<Rgb> radiance, std::shared_ptr<const MipFilter> filter) {
    if (radiance.size() != filter->layouts[0]->texelCount()) throw std::invalid_argument("radiance size mismatch");
    EnvCubeMipmap env;
    env.baseResolution = filter->baseResolution;
    env.filter = std::move(filter);
    env.levelRoughness = env.filter->roughness;
    env.filter->apply(radiance, env.levels);
    return env;
}

/// Footprint of a sampleEnv call: (level, texel, weight) per tap.
struct EnvFootprint {
    struct Entry {
        int level;
        std::uint32_t texel;
        double weight;
    };
    std::array<Entry, 8> entries{};
    int count = 0;
};

/// Level pair and blend factor bracketing `roughness`.
template <typename T>
struct LevelBlend {
    int lower = 0;
    int upper = 0;
    T t{};
};

template <typename T>
LevelBlend<T> levelBlend(const std::vector<double>& levelRoughness, const T& roughness) {
    LevelBlend<T> b;
    const double r = value(roughness);
    const int last = static_cast<int>(levelRoughness.size()) - 1;
    if (r <= levelRoughness[0]) return b;
    if (r >= levelRoughness[static_cast<std::size_t>(last)]) {
        b.lower = b.upper = last;
        return b;
    }
    int k = 0;
    while (k + 1 < last && r >= levelRoughness[static_cast<std::size_t>(k + 1)]) ++k;
    b.lower = k;
    b.upper = k + 1;
    const double r0 = levelRoughness[static_cast<std::size_t>(k)], r1 = levelRoughness[static_cast<std::size_t>(k + 1)];
    b.t = (roughness - r0) / (r1 - r0);
    return b;
}

/// Bilinear radiance of one level at `dir`.
template <typename T>
Vec3<T> sampleLevel(const EnvCubeMipmap& env, int level, const Vec3<T>& dir, EnvFootprint* fp = nullptr,
                    double scale = 1.0) {
    const BilinearTaps<T> taps = bilinearTaps(env.layout(level), dir);
    const std::vector<Rgb>& tex = env.levels[static_cast<std::size_t>(level)];
    Vec3<T> out{T(0.0), T(0.0), T(0.0)};
    for (std::size_t k = 0; k < 4; ++k) {
        const Rgb& v = tex[taps.texel[k]];
        out += Vec3<T>(v) * taps.weight[k];
        if (fp && scale != 0.0) fp->entries[static_cast<std::size_t>(fp->count++)] = {level, taps.texel[k], value(taps.weight[k]) * scale};
    }
    return out;
}

/// Prefiltered radiance toward `dir` for the given roughness: bilinear in
/// each bracketing level, linear in roughness between levels.
template <typename T>
Vec3<T> sampleEnv(const EnvCubeMipmap& env, const Vec3<T>& dir, const T& roughness, EnvFootprint* fp = nullptr) {
    if (fp) fp->count = 0;
    const LevelBlend<T> b = levelBlend(env.levelRoughness, roughness);
    if (b.lower == b.upper) return sampleLevel(env, b.lower, dir, fp, 1.0);
    const double t = value(b.t);
    const Vec3<T> lo = sampleLevel(env, b.lower, dir, fp, 1.0 - t);
    const Vec3<T> hi = sampleLevel(env, b.upper, dir, fp, t);
    return lo * (T(1.0) - b.t) + hi * b.t;
}

inline Rgb sampleEnv(const EnvCubeMipmap& env, const Vec3d& dir, double roughness) {
    return sampleEnv<double>(env, dir, roughness, nullptr);
}

/// Irradiance and its Jacobian with respect to the normal (row c = d irr_c / d n).
struct IrradianceResult {
    Rgb value{};
    Mat3d jacobian{};
};

/// Cosine-weighted hemisphere sum over the texels of `radiance` (laid out by
/// `layout`), weighted by texel solid angle.
inline IrradianceResult irradiance(const CubeLayout& layout, const std::vector<Rgb>& radiance, const Vec3d& n,
                                   bool withJacobian = false) {
    IrradianceResult r;
    double jx[3] = {0, 0, 0}, jy[3] = {0, 0, 0}, jz[3] = {0, 0, 0};
    double vr = 0.0, vg = 0.0, vb = 0.0;
    const std::size_t count = layout.texelCount();
    const double* dx = layout.dirX.data();
    const double* dy = layout.dirY.data();
    const double* dz = layout.dirZ.data();
    const double* sa = layout.solidAngle.data();
    const Rgb* tex = radiance.data();
    for (std::size_t t = 0; t < count; ++t) {
        const double c = dx[t] * n.x + dy[t] * n.y + dz[t] * n.z;
        if (c <= 0.0) continue;
        const double w = c * sa[t];
        vr += tex[t].x * w;
        vg += tex[t].y * w;
        vb += tex[t].z * w;
        if (withJacobian) {
            const double er = tex[t].x * sa[t], eg = tex[t].y * sa[t], eb = tex[t].z * sa[t];
            jx[0] += er * dx[t];
            jx[1] += er * dy[t];
            jx[2] += er * dz[t];
            jy[0] += eg * dx[t];
            jy[1] += eg * dy[t];
            jy[2] += eg * dz[t];
            jz[0] += eb * dx[t];
            jz[1] += eb * dy[t];
            jz[2] += eb * dz[t];
        }
    }
    r.value = {vr, vg, vb};
    if (withJacobian) r.jacobian.m = {jx[0], jx[1], jx[2], jy[0], jy[1], jy[2], jz[0], jz[1], jz[2]};
    return r;
}

/// Adds d(irradiance . adjoint) / d(radiance) to `grad`.
inline void accumulateIrradianceAdjoint(const CubeLayout& layout, const Vec3d& n, const Rgb& adjoint,
                                        std::vector<Rgb>& grad) {
    const std::size_t count = layout.texelCount();
    for (std::size_t t = 0; t < count; ++t) {
        const double c = layout.dirX[t] * n.x + layout.dirY[t] * n.y + layout.dirZ[t] * n.z;
        if (c <= 0.0) continue;
        grad[t] += adjoint * (c * layout.solidAngle[t]);
    }
}

/// Diffuse irradiance of the environment's base level around unit normal n.
inline Rgb diffuseIrradiance(const EnvCubeMipmap& env, const Vec3d& n) {
    return irradiance(env.layout(0), env.base(), n).value;
}

/// Split-sum BRDF table: the specular directional albedo is F0 * tau0 + tau1.
/// Nodes are uniform in cos(theta) over [cosMin, cosMax] and in roughness over
/// [roughMin, roughMax]; storage is roughness-major.
struct SplitSumLUT {
    int cosCount = 0;
    int roughCount = 0;
    double cosMin = 0.0, cosMax = 1.0;
    double roughMin = kRoughnessMin, roughMax = 1.0;
    std::vector<double> tau0, tau1;

    std::size_t index(int ic, int ir) const { return static_cast<std::size_t>(ir) * cosCount + ic; }
    double cosNode(int i) const { return cosMin + (cosMax - cosMin) * i / (cosCount - 1); }
    double roughNode(int j) const { return roughMin + (roughMax - roughMin) * j / (roughCount - 1); }
    bool empty() const { return tau0.empty(); }

    /// Bilinear lookup, clamped to the table range.
    template <typename T>
    std::array<T, 2> lookup(const T& cosTheta, const T& roughness) const {
        auto coord = [](const T& x, double lo, double hi, int n, int& i0) {
            T s = (x - lo) / (hi - lo) * double(n - 1);
            if (value(s) <= 0.0) s = T(0.0);
            if (value(s) >= n - 1) s = T(double(n - 1));
            i0 = std::min(static_cast<int>(std::floor(value(s))), n - 2);
            return s - double(i0);
        };
        int ic = 0, ir = 0;
        const T fc = coord(cosTheta, cosMin, cosMax, cosCount, ic);
        const T fr = coord(roughness, roughMin, roughMax, roughCount, ir);
        auto bilerp = [&](const std::vector<double>& tab) {
            const double a = tab[index(ic, ir)], b = tab[index(ic + 1, ir)];
            const double c = tab[index(ic, ir + 1)], d = tab[index(ic + 1, ir + 1)];
            return (a * (T(1.0) - fc) + b * fc) * (T(1.0) - fr) + (c * (T(1.0) - fc) + d * fc) * fr;
        };
        return {bilerp(tau0), bilerp(tau1)};
    }
};

/// Monte Carlo split-sum integration (GGX, alpha = r^2, height-correlated
/// Smith) with `sampleCount` Hammersley visible-normal samples per node.
inline SplitSumLUT precomputeLUT(int sampleCount, int cosCount = 32, int roughCount = 32) {
    if (sampleCount < 1024) throw std::invalid_argument("split-sum LUT needs at least 1024 samples");
    if (cosCount < 2 || roughCount < 2) throw std::invalid_argument("split-sum LUT needs at least 2x2 nodes");
    SplitSumLUT lut;
    lut.cosCount = cosCount;
    lut.roughCount = roughCount;
    lut.cosMin = 0.5 / cosCount;
    lut.cosMax = 1.0;
    lut.tau0.assign(static_cast<std::size_t>(cosCount) * roughCount, 0.0);
    lut.tau1.assign(lut.tau0.size(), 0.0);
    const auto n = static_cast<std::uint32_t>(sampleCount);
    for (int ir = 0; ir < roughCount; ++ir) {
        const double alpha = sqr(lut.roughNode(ir));
        for (int ic = 0; ic < cosCount; ++ic) {
            const double nDotV = lut.cosNode(ic);
            const Vec3d v{std::sqrt(std::max(0.0, 1.0 - nDotV * nDotV)), 0.0, nDotV};
            const double g1 = smithMasking(nDotV, alpha);
            double a = 0.0, b = 0.0;
            for (std::uint32_t s = 0; s < n; ++s) {
                const Vec3d h = sampleGgxVisibleNormal(hammersley(s, n), v, alpha);
                const double vDotH = dot(v, h);
                const Vec3d l = h * (2.0 * vDotH) - v;
                const double nDotL = l.z;
                if (nDotL <= 0.0 || vDotH <= 0.0) continue;
                const double term = 4.0 * smithVisibility(nDotV, nDotL, alpha) * nDotL * nDotV / g1;
                const double fc = std::pow(1.0 - vDotH, 5.0);
                a += (1.0 - fc) * term;
                b += fc * term;
            }
            lut.tau0[lut.index(ic, ir)] = a / sampleCount;
            lut.tau1[lut.index(ic, ir)] = b / sampleCount;
        }
    }
    return lut;
}

}  // namespace polarsplat
