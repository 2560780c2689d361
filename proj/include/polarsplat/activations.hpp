#pragma once

#include <algorithm>
#include <cmath>

#include "polarsplat/math.hpp"

namespace polarsplat {

template <typename T>
inline T sigmoid(const T& x) {
    using std::exp;
    if (value(x) >= 0.0) {
        const T e = exp(-x);
        return T(1.0) / (T(1.0) + e);
    }
    const T e = exp(x);
    return e / (T(1.0) + e);
}

inline double sigmoidDerivative(double x) {
    const double s = sigmoid(x);
    return s * (1.0 - s);
}

inline double logit(double p) { return std::log(p / (1.0 - p)); }

inline constexpr double kIorMin = 1.3;
inline constexpr double kIorMax = 2.3;
inline constexpr double kRoughnessMin = 0.08;

/// Maps an unconstrained latent to an index of refraction in (1.3, 2.3).
template <typename T>
inline T iorActivation(const T& mu) {
    return T(kIorMin) + sigmoid(mu);
}

inline double iorActivationInverse(double eta) { return logit(eta - kIorMin); }

/// Roughness latent to [0.08, 1].
template <typename T>
inline T roughnessActivation(const T& x) {
    return T(kRoughnessMin) + T(1.0 - kRoughnessMin) * sigmoid(x);
}

inline double roughnessActivationInverse(double r) {
    return logit((r - kRoughnessMin) / (1.0 - kRoughnessMin));
}

/// Latent at and below which radiance is exactly zero (sigmoid there is
/// below 4e-44). Finite, so black environments survive float32 files.
inline constexpr double kEnvLatentFloor = -100.0;

/// Environment radiance activation: sigmoid below zero, x + 0.5 above.
/// Monotone; the slope jumps from 1/4 to 1 at zero.
inline double envActivation(double x) {
    if (x <= kEnvLatentFloor) return 0.0;
    return x <= 0.0 ? sigmoid(x) : x + 0.5;
}

inline double envActivationDerivative(double x) {
    if (x <= kEnvLatentFloor) return 0.0;
    return x <= 0.0 ? sigmoidDerivative(x) : 1.0;
}

/// Inverse of envActivation; zero radiance maps to the floor.
inline double envActivationInverse(double radiance) {
    if (radiance <= 0.5) return std::max(kEnvLatentFloor, logit(radiance));
    return radiance - 0.5;
}

}  // namespace polarsplat
