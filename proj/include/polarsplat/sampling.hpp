#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "polarsplat/math.hpp"

namespace polarsplat {

inline double radicalInverse2(std::uint32_t bits) {
    bits = (bits << 16u) | (bits >> 16u);
    bits = ((bits & 0x55555555u) << 1u) | ((bits & 0xAAAAAAAAu) >> 1u);
    bits = ((bits & 0x33333333u) << 2u) | ((bits & 0xCCCCCCCCu) >> 2u);
    bits = ((bits & 0x0F0F0F0Fu) << 4u) | ((bits & 0xF0F0F0F0u) >> 4u);
    bits = ((bits & 0x00FF00FFu) << 8u) | ((bits & 0xFF00FF00u) >> 8u);
    return static_cast<double>(bits) * 2.3283064365386963e-10;
}

struct Sample2 {
    double u, v;
};

inline Sample2 hammersley(std::uint32_t i, std::uint32_t n) {
    return {(static_cast<double>(i) + 0.5) / n, radicalInverse2(i)};
}

/// GGX half-vector sample around +z with alpha = roughness^2.
inline Vec3d sampleGgxHalfVector(const Sample2& s, double alpha) {
    const double phi = 2.0 * kPi * s.u;
    const double a2 = alpha * alpha;
    const double cos2 = (1.0 - s.v) / (1.0 + (a2 - 1.0) * s.v);
    const double cosTheta = std::sqrt(cos2);
    const double sinTheta = std::sqrt(std::max(0.0, 1.0 - cos2));
    return {sinTheta * std::cos(phi), sinTheta * std::sin(phi), cosTheta};
}

/// GGX visible-normal sample for view `v` (local frame, v.z > 0).
inline Vec3d sampleGgxVisibleNormal(const Sample2& s, const Vec3d& v, double alpha) {
    const Vec3d vh = normalize(Vec3d{alpha * v.x, alpha * v.y, v.z});
    const double lensq = vh.x * vh.x + vh.y * vh.y;
    const Vec3d t1 = lensq > 0.0 ? Vec3d{-vh.y, vh.x, 0.0} / std::sqrt(lensq) : Vec3d{1.0, 0.0, 0.0};
    const Vec3d t2 = cross(vh, t1);
    const double r = std::sqrt(s.u);
    const double phi = 2.0 * kPi * s.v;
    const double p1 = r * std::cos(phi);
    const double blend = 0.5 * (1.0 + vh.z);
    const double p2 = (1.0 - blend) * std::sqrt(std::max(0.0, 1.0 - p1 * p1)) + blend * r * std::sin(phi);
    const Vec3d nh = t1 * p1 + t2 * p2 + vh * std::sqrt(std::max(0.0, 1.0 - p1 * p1 - p2 * p2));
    return normalize(Vec3d{alpha * nh.x, alpha * nh.y, std::max(0.0, nh.z)});
}

/// Smith masking G1 for one direction.
inline double smithMasking(double nDotV, double alpha) {
    const double a2 = alpha * alpha;
    return 2.0 * nDotV / (nDotV + std::sqrt(a2 + (1.0 - a2) * nDotV * nDotV));
}

/// GGX normal distribution D(h) for alpha = roughness^2.
inline double ggxDistribution(double nDotH, double alpha) {
    const double a2 = alpha * alpha;
    const double f = nDotH * nDotH * (a2 - 1.0) + 1.0;
    return a2 / (kPi * f * f);
}

/// Height-correlated Smith visibility G / (4 NoL NoV).
inline double smithVisibility(double nDotV, double nDotL, double alpha) {
    const double a2 = alpha * alpha;
    const double gv = nDotL * std::sqrt(nDotV * nDotV * (1.0 - a2) + a2);
    const double gl = nDotV * std::sqrt(nDotL * nDotL * (1.0 - a2) + a2);
    return 0.5 / (gv + gl);
}

/// Orthonormal basis with `n` as third axis.
inline void tangentFrame(const Vec3d& n, Vec3d& t, Vec3d& b) {
    const Vec3d helper = std::abs(n.z) < 0.999 ? Vec3d{0.0, 0.0, 1.0} : Vec3d{1.0, 0.0, 0.0};
    t = normalize(cross(helper, n));
    b = cross(n, t);
}

}  // namespace polarsplat
