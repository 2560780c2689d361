#pragma once

// Image losses with their gradients. Every loss is a mean, so images of any
// size are comparable; gradient images are accumulated into (not overwritten)
// when a pointer is passed.

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "polarsplat/math.hpp"
#include "polarsplat/surfel.hpp"

namespace polarsplat {

struct LossWeights {
    double lambda1 = 10.0;  // polarization
    double lambda2 = 0.4;   // mask
    double lambda3 = 0.2;   // depth-normal consistency
    double lambda4 = 0.1;   // normal smoothness
};

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr double kRgbL1Weight = 0.8;

template <typename A, typename B>
void requireSameShape(const Image<A>& a, const Image<B>& b, const char* what) {
    if (a.width != b.width || a.height != b.height) throw std::invalid_argument(std::string(what) + ": image size mismatch");
}

inline double signOf(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

/// Normalized 1-D Gaussian taps of the SSIM window.
inline const std::array<double, kSsimWindow>& ssimKernel() {
    static const std::array<double, kSsimWindow> k = [] {
        std::array<double, kSsimWindow> w{};
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i) {
            const double d = i - kSsimWindow / 2;
            w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
            sum += w[static_cast<std::size_t>(i)];
        }
        for (double& v : w) v /= sum;
        return w;
    }();
    return k;
}

/// Separable Gaussian blur with zero padding, same output size.
inline Image<double> gaussianBlur(const Image<double>& in) {
    const auto& k = ssimKernel();
    const int r = kSsimWindow / 2;
    Image<double> tmp(in.width, in.height), out(in.width, in.height);
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int xx = x + i;
                if (xx >= 0 && xx < in.width) acc += k[static_cast<std::size_t>(i + r)] * in.at(xx, y);
            }
            tmp.at(x, y) = acc;
        }
    for (int y = 0; y < in.height; ++y)
        for (int x = 0; x < in.width; ++x) {
            double acc = 0.0;
            for (int i = -r; i <= r; ++i) {
                const int yy = y + i;
                if (yy >= 0 && yy < in.height) acc += k[static_cast<std::size_t>(i + r)] * tmp.at(x, yy);
            }
            out.at(x, y) = acc;
        }
    return out;
}

/// Mean SSIM of two single-channel images (zero-padded window, same size).
/// `gradX`, when given, receives d(mean SSIM)/dx scaled by `gradScale`.
inline double ssim(const Image<double>& x, const Image<double>& y, Image<double>* gradX = nullptr,
                   double gradScale = 1.0) {
    requireSameShape(x, y, "ssim");
    const std::size_t n = x.size();
    if (n == 0) return 1.0;
    Image<double> xx(x.width, x.height), yy(x.width, x.height), xy(x.width, x.height);
    for (std::size_t i = 0; i < n; ++i) {
        xx.pixels[i] = x.pixels[i] * x.pixels[i];
        yy.pixels[i] = y.pixels[i] * y.pixels[i];
        xy.pixels[i] = x.pixels[i] * y.pixels[i];
    }
    const Image<double> mx = gaussianBlur(x), my = gaussianBlur(y);
    const Image<double> exx = gaussianBlur(xx), eyy = gaussianBlur(yy), exy = gaussianBlur(xy);
    Image<double> dMu, dExx, dExy;
    if (gradX) {
        dMu = Image<double>(x.width, x.height);
        dExx = Image<double>(x.width, x.height);
        dExy = Image<double>(x.width, x.height);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ux = mx.pixels[i], uy = my.pixels[i];
        const double a1 = 2.0 * ux * uy + kSsimC1;
        const double a2 = 2.0 * (exy.pixels[i] - ux * uy) + kSsimC2;
        const double b1 = ux * ux + uy * uy + kSsimC1;
        const double b2 = (exx.pixels[i] - ux * ux) + (eyy.pixels[i] - uy * uy) + kSsimC2;
        const double s = a1 * a2 / (b1 * b2);
        sum += s;
        if (gradX) {
            const double inv = 1.0 / (b1 * b2);
            dMu.pixels[i] = (2.0 * uy * a2 - 2.0 * uy * a1) * inv - s * (2.0 * ux / b1 - 2.0 * ux / b2);
            dExx.pixels[i] = -s / b2;
            dExy.pixels[i] = 2.0 * a1 * inv;
        }
    }
    if (gradX) {
        requireSameShape(*gradX, x, "ssim gradient");
        const Image<double> gMu = gaussianBlur(dMu), gExx = gaussianBlur(dExx), gExy = gaussianBlur(dExy);
        const double scale = gradScale / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i)
            gradX->pixels[i] +=
                scale * (gMu.pixels[i] + 2.0 * x.pixels[i] * gExx.pixels[i] + y.pixels[i] * gExy.pixels[i]);
    }
    return sum / static_cast<double>(n);
}

inline Image<double> channel(const Image<Rgb>& img, std::size_t c) {
    Image<double> out(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) out.pixels[i] = img.pixels[i][c];
    return out;
}

/// Mean SSIM over the three channels.
inline double ssimRgb(const Image<Rgb>& x, const Image<Rgb>& y, Image<Rgb>* gradX = nullptr, double gradScale = 1.0) {
    requireSameShape(x, y, "ssim");
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) {
        Image<double> g;
        if (gradX) g = Image<double>(x.width, x.height);
        sum += ssim(channel(x, c), channel(y, c), gradX ? &g : nullptr, gradScale / 3.0);
        if (gradX)
            for (std::size_t i = 0; i < g.size(); ++i) gradX->pixels[i][c] += g.pixels[i];
    }
    return sum / 3.0;
}

/// Mean absolute difference over pixels and channels.
inline double l1(const Image<Rgb>& a, const Image<Rgb>& b, Image<Rgb>* gradA = nullptr, double gradScale = 1.0) {
    requireSameShape(a, b, "l1");
    if (a.size() == 0) return 0.0;
    const double inv = 1.0 / (3.0 * static_cast<double>(a.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Rgb d = a.pixels[i] - b.pixels[i];
        sum += std::abs(d.x) + std::abs(d.y) + std::abs(d.z);
        if (gradA) gradA->pixels[i] += Rgb{signOf(d.x), signOf(d.y), signOf(d.z)} * (gradScale * inv);
    }
    return sum * inv;
}

inline double l1(const Image<double>& a, const Image<double>& b, Image<double>* gradA = nullptr,
                 double gradScale = 1.0) {
    requireSameShape(a, b, "l1");
    if (a.size() == 0) return 0.0;
    const double inv = 1.0 / static_cast<double>(a.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += std::abs(d);
        if (gradA) gradA->pixels[i] += signOf(d) * gradScale * inv;
    }
    return sum * inv;
}

/// 0.8 L1 + 0.2 (1 - SSIM) / 2.
inline double lossRGB(const Image<Rgb>& s0, const Image<Rgb>& gt, Image<Rgb>* grad = nullptr, double gradScale = 1.0) {
    requireSameShape(s0, gt, "lossRGB");
    const double d = 1.0 - kRgbL1Weight;
    const double a = l1(s0, gt, grad, gradScale * kRgbL1Weight);
    const double s = ssimRgb(s0, gt, grad, -gradScale * d * 0.5);
    return kRgbL1Weight * a + d * (1.0 - s) * 0.5;
}

inline double lossPol(const Image<Rgb>& s1, const Image<Rgb>& s2, const Image<Rgb>& gt1, const Image<Rgb>& gt2,
                      Image<Rgb>* grad1 = nullptr, Image<Rgb>* grad2 = nullptr, double gradScale = 1.0) {
    return l1(s1, gt1, grad1, gradScale) + l1(s2, gt2, grad2, gradScale);
}

inline double lossMask(const Image<double>& opacity, const Image<double>& mask, Image<double>* grad = nullptr,
                       double gradScale = 1.0) {
    return l1(opacity, mask, grad, gradScale);
}

inline bool isZero(const Vec3d& v) { return v.x == 0.0 && v.y == 0.0 && v.z == 0.0; }

/// Mean of 1 - n~.n over pixels where both normals exist and (if given) the
/// mask is at least 0.5.
inline double lossDepthNormal(const Image<Vec3d>& n, const Image<Vec3d>& nDepth, const Image<double>* mask = nullptr,
                              Image<Vec3d>* gradN = nullptr, Image<Vec3d>* gradDepth = nullptr,
                              double gradScale = 1.0) {
    requireSameShape(n, nDepth, "lossDepthNormal");
    if (mask) requireSameShape(n, *mask, "lossDepthNormal");
    std::vector<std::size_t> used;
    double sum = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) {
        if (isZero(n.pixels[i]) || isZero(nDepth.pixels[i])) continue;
        if (mask && mask->pixels[i] < 0.5) continue;
        used.push_back(i);
        sum += 1.0 - dot(n.pixels[i], nDepth.pixels[i]);
    }
    if (used.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(used.size());
    for (std::size_t i : used) {
        if (gradN) gradN->pixels[i] += nDepth.pixels[i] * (-gradScale * inv);
        if (gradDepth) gradDepth->pixels[i] += n.pixels[i] * (-gradScale * inv);
    }
    return sum * inv;
}

/// Luminance-free edge strength: the mean of the three channels.
inline double grayOf(const Rgb& c) { return (c.x + c.y + c.z) / 3.0; }

/// Mean over masked interior pixels of |grad n| exp(-|grad s0|), with forward
/// differences. A pixel is used when it and its right and lower neighbours
/// are inside the mask (or every pixel when no mask is given).
inline double lossSmooth(const Image<Vec3d>& n, const Image<Rgb>& gtS0, const Image<double>* mask = nullptr,
                         Image<Vec3d>* gradN = nullptr, double gradScale = 1.0) {
    requireSameShape(n, gtS0, "lossSmooth");
    if (mask) requireSameShape(n, *mask, "lossSmooth");
    auto inside = [&](std::size_t i) { return !mask || mask->pixels[i] >= 0.5; };
    struct Term {
        std::size_t c, r, d;
        Vec3d gx, gy;
        double len, weight;
    };
    std::vector<Term> terms;
    double sum = 0.0;
    for (int y = 0; y + 1 < n.height; ++y)
        for (int x = 0; x + 1 < n.width; ++x) {
            const std::size_t c = n.index(x, y), r = n.index(x + 1, y), d = n.index(x, y + 1);
            if (!inside(c) || !inside(r) || !inside(d)) continue;
            const Vec3d gx = n.pixels[r] - n.pixels[c], gy = n.pixels[d] - n.pixels[c];
            const double ix = grayOf(gtS0.pixels[r]) - grayOf(gtS0.pixels[c]);
            const double iy = grayOf(gtS0.pixels[d]) - grayOf(gtS0.pixels[c]);
            const double w = std::exp(-std::sqrt(ix * ix + iy * iy));
            const double len = std::sqrt(dot(gx, gx) + dot(gy, gy));
            sum += len * w;
            terms.push_back({c, r, d, gx, gy, len, w});
        }
    if (terms.empty()) return 0.0;
    const double inv = 1.0 / static_cast<double>(terms.size());
    if (gradN)
        for (const Term& t : terms) {
            if (!(t.len > 0.0)) continue;  // subgradient 0 at a flat patch
            const double s = gradScale * inv * t.weight / t.len;
            gradN->pixels[t.r] += t.gx * s;
            gradN->pixels[t.d] += t.gy * s;
            gradN->pixels[t.c] -= (t.gx + t.gy) * s;
        }
    return sum * inv;
}

/// Intensity behind a linear polarizer at `theta` from s0, s1, s2 planes.
inline Image<Rgb> lpIntensity(const Image<Rgb>& s0, const Image<Rgb>& s1, const Image<Rgb>& s2, double theta) {
    requireSameShape(s0, s1, "lpIntensity");
    requireSameShape(s0, s2, "lpIntensity");
    Image<Rgb> out(s0.width, s0.height);
    const double c = std::cos(2.0 * theta), s = std::sin(2.0 * theta);
    for (std::size_t i = 0; i < out.size(); ++i) out.pixels[i] = (s0.pixels[i] + s1.pixels[i] * c + s2.pixels[i] * s) * 0.5;
    return out;
}

/// Mean L1 between the simulated capture at `theta` and the observed intensity.
/// Gradients go to the Stokes planes and to theta.
inline double lossLPCapture(const Image<Rgb>& s0, const Image<Rgb>& s1, const Image<Rgb>& s2, double theta,
                            const Image<Rgb>& observed, Image<Rgb>* g0 = nullptr, Image<Rgb>* g1 = nullptr,
                            Image<Rgb>* g2 = nullptr, double* gTheta = nullptr, double gradScale = 1.0) {
    const Image<Rgb> pred = lpIntensity(s0, s1, s2, theta);
    requireSameShape(pred, observed, "lossLPCapture");
    if (pred.size() == 0) return 0.0;
    Image<Rgb> g(pred.width, pred.height);
    const double loss = l1(pred, observed, &g, gradScale);
    const double c = std::cos(2.0 * theta), s = std::sin(2.0 * theta);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const Rgb d = g.pixels[i];
        if (g0) g0->pixels[i] += d * 0.5;
        if (g1) g1->pixels[i] += d * (0.5 * c);
        if (g2) g2->pixels[i] += d * (0.5 * s);
        if (gTheta) {
            const Rgb dp = s2.pixels[i] * c - s1.pixels[i] * s;  // d pred / d theta
            *gTheta += dot(d, dp);
        }
    }
    return loss;
}


enum class PolarizationMode { FullStokes, PartialLP };

/// One image taken through linear polarizer `lp` (an index into the LP-angle list).
struct LPCapture {
    int lp = 0;
    Image<Rgb> intensity;
};

/// Ground truth for one view: s0, s1, s2 in full-Stokes mode, polarizer
/// captures in partial mode, and the object mask.
struct Observation {
    Camera camera;
    Image<Rgb> s0, s1, s2;
    std::vector<LPCapture> captures;
    Image<double> mask;

    /// Image whose edges guide the smoothness term: s0, or twice the mean
    /// capture when only polarizer images exist.
    Image<Rgb> edgeGuide() const {
        if (s0.size() > 0 || captures.empty()) return s0;
        Image<Rgb> g(captures.front().intensity.width, captures.front().intensity.height);
        for (const auto& c : captures)
            for (std::size_t i = 0; i < g.size(); ++i) g.pixels[i] += c.intensity.pixels[i];
        const double k = 2.0 / static_cast<double>(captures.size());
        for (Rgb& v : g.pixels) v = v * k;
        return g;
    }
};

/// Rendered planes the loss compares against an observation.
struct RenderOutputs {
    Image<Rgb> s0, s1, s2;
    Image<double> opacity;
    Image<Vec3d> normal;       // blended surfel normals
    Image<Vec3d> depthNormal;  // normals from depth gradients
};

/// d loss / d (each plane of RenderOutputs) and d loss / d (LP angles).
struct RenderAdjoint {
    Image<Rgb> s0, s1, s2;
    Image<double> opacity;
    Image<Vec3d> normal, depthNormal;
    std::vector<double> lpAngles;

    RenderAdjoint() = default;
    RenderAdjoint(int w, int h, std::size_t lpCount)
        : s0(w, h), s1(w, h), s2(w, h), opacity(w, h), normal(w, h), depthNormal(w, h), lpAngles(lpCount, 0.0) {}
};

struct LossSetup {
    LossWeights weights;
    PolarizationMode mode = PolarizationMode::FullStokes;
    std::vector<double> lpAngles;  // radians, partial mode
};

struct LossBreakdown {
    double rgb = 0.0, pol = 0.0, lp = 0.0, mask = 0.0, depth = 0.0, smooth = 0.0, total = 0.0;

    LossBreakdown& operator+=(const LossBreakdown& o) {
        rgb += o.rgb;
        pol += o.pol;
        lp += o.lp;
        mask += o.mask;
        depth += o.depth;
        smooth += o.smooth;
        total += o.total;
        return *this;
    }
    LossBreakdown scaled(double k) const { return {rgb * k, pol * k, lp * k, mask * k, depth * k, smooth * k, total * k}; }
};

/// L = L_rgb + l1 L_pol + l2 L_mask + l3 L_depth + l4 L_smooth; in partial
/// mode the polarizer-capture loss replaces L_rgb + l1 L_pol. Gradients are
/// scaled by `gradScale` and added to `adj`.
inline LossBreakdown totalLoss(const Observation& obs, const RenderOutputs& r, const LossSetup& setup,
                               RenderAdjoint* adj = nullptr, double gradScale = 1.0) {
    const LossWeights& w = setup.weights;
    LossBreakdown b;
    if (setup.mode == PolarizationMode::FullStokes) {
        b.rgb = lossRGB(r.s0, obs.s0, adj ? &adj->s0 : nullptr, gradScale);
        b.pol = lossPol(r.s1, r.s2, obs.s1, obs.s2, adj ? &adj->s1 : nullptr, adj ? &adj->s2 : nullptr,
                        gradScale * w.lambda1);
    } else {
        for (const LPCapture& c : obs.captures) {
            if (c.lp < 0 || static_cast<std::size_t>(c.lp) >= setup.lpAngles.size())
                throw std::invalid_argument("capture names an unknown polarizer");
            double* gTheta = adj ? &adj->lpAngles[static_cast<std::size_t>(c.lp)] : nullptr;
            b.lp += lossLPCapture(r.s0, r.s1, r.s2, setup.lpAngles[static_cast<std::size_t>(c.lp)], c.intensity,
                                  adj ? &adj->s0 : nullptr, adj ? &adj->s1 : nullptr, adj ? &adj->s2 : nullptr,
                                  gTheta, gradScale);
        }
    }
    const Image<double>* mask = obs.mask.size() > 0 ? &obs.mask : nullptr;
    if (mask && w.lambda2 != 0.0) b.mask = lossMask(r.opacity, obs.mask, adj ? &adj->opacity : nullptr, gradScale * w.lambda2);
    if (w.lambda3 != 0.0)
        b.depth = lossDepthNormal(r.normal, r.depthNormal, mask, adj ? &adj->normal : nullptr,
                                  adj ? &adj->depthNormal : nullptr, gradScale * w.lambda3);
    if (w.lambda4 != 0.0)
        b.smooth = lossSmooth(r.normal, obs.edgeGuide(), mask, adj ? &adj->normal : nullptr, gradScale * w.lambda4);
    b.total = b.rgb + w.lambda1 * b.pol + b.lp + w.lambda2 * b.mask + w.lambda3 * b.depth + w.lambda4 * b.smooth;
    return b;
}

}  // namespace polarsplat
