#pragma once

// Evaluation metrics on linear images and normal maps.

#include <algorithm>
#include <cmath>

#include "polarsplat/losses.hpp"

namespace polarsplat {

inline constexpr double kPsnrCap = 99.0;

/// PSNR in dB for unit peak, capped for identical images.
inline double psnr(const Image<Rgb>& a, const Image<Rgb>& b) {
    requireSameShape(a, b, "psnr");
    if (a.size() == 0) return kPsnrCap;
    double se = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const Rgb d = a.pixels[i] - b.pixels[i];
        se += dot(d, d);
    }
    const double mse = se / (3.0 * static_cast<double>(a.size()));
    if (!(mse > 0.0)) return kPsnrCap;
    return std::min(kPsnrCap, -10.0 * std::log10(mse));
}

struct NormalErrors {
    double cosineDistance = 0.0;  // mean 1 - n^.n
    double maeDegrees = 0.0;      // mean angle
    std::size_t pixels = 0;
};

/// Normal-map errors over pixels inside the mask (>= 0.5) where both maps
/// hold a nonzero normal; without a mask, over every such pixel.
inline NormalErrors normalErrors(const Image<Vec3d>& estimate, const Image<Vec3d>& reference,
                                 const Image<double>* mask = nullptr) {
    requireSameShape(estimate, reference, "normalErrors");
    if (mask) requireSameShape(estimate, *mask, "normalErrors");
    NormalErrors e;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
        if (mask && mask->pixels[i] < 0.5) continue;
        if (isZero(estimate.pixels[i]) || isZero(reference.pixels[i])) continue;
        // atan2 keeps identical normals at exactly zero angle.
        const Vec3d a = normalize(estimate.pixels[i]), b = normalize(reference.pixels[i]);
        const double angle = std::atan2(length(cross(a, b)), dot(a, b));
        e.cosineDistance += 1.0 - std::cos(angle);
        e.maeDegrees += angle * 180.0 / kPi;
        ++e.pixels;
    }
    if (e.pixels > 0) {
        e.cosineDistance /= static_cast<double>(e.pixels);
        e.maeDegrees /= static_cast<double>(e.pixels);
    }
    return e;
}

}  // namespace polarsplat
