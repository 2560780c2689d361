#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace polarsplat {

/// Forward-mode dual number carrying N tangent directions.
///
/// Used for local Jacobians with few inputs (a pixel's G-buffer sample, a
/// surfel's geometric parameters); the global adjoint is assembled by hand
/// from those local Jacobians.
template <std::size_t N>
struct Dual {
    double v = 0.0;
    std::array<double, N> d{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT: implicit lift of constants

    static Dual variable(double value, std::size_t index) {
        Dual r(value);
        r.d[index] = 1.0;
        return r;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] += o.d[i];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (std::size_t i = 0; i < N; ++i) d[i] -= o.d[i];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (std::size_t i = 0; i < N; ++i) d[i] = d[i] * o.v + v * o.d[i];
        v *= o.v;
        return *this;
    }
    Dual& operator/=(const Dual& o) {
        *this = *this / o;
        return *this;
    }

    friend Dual operator+(Dual a, const Dual& b) { return a += b; }
    friend Dual operator-(Dual a, const Dual& b) { return a -= b; }
    friend Dual operator*(Dual a, const Dual& b) { return a *= b; }
    friend Dual operator/(const Dual& a, const Dual& b) {
        Dual r(a.v / b.v);
        const double inv = 1.0 / b.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
        return r;
    }
    friend Dual operator+(Dual a, double b) {
        a.v += b;
        return a;
    }
    friend Dual operator+(double b, Dual a) {
        a.v += b;
        return a;
    }
    friend Dual operator-(Dual a, double b) {
        a.v -= b;
        return a;
    }
    friend Dual operator-(double b, const Dual& a) {
        Dual r(b - a.v);
        for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
        return r;
    }
    friend Dual operator*(Dual a, double b) {
        a.v *= b;
        for (auto& x : a.d) x *= b;
        return a;
    }
    friend Dual operator*(double b, Dual a) { return a * b; }
    friend Dual operator/(Dual a, double b) { return a * (1.0 / b); }
    friend Dual operator/(double b, const Dual& a) {
        Dual r(b / a.v);
        const double k = -r.v / a.v;
        for (std::size_t i = 0; i < N; ++i) r.d[i] = k * a.d[i];
        return r;
    }
    friend Dual operator-(const Dual& a) {
        Dual r(-a.v);
        for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
        return r;
    }

    friend bool operator<(const Dual& a, const Dual& b) { return a.v < b.v; }
    friend bool operator>(const Dual& a, const Dual& b) { return a.v > b.v; }
    friend bool operator<=(const Dual& a, const Dual& b) { return a.v <= b.v; }
    friend bool operator>=(const Dual& a, const Dual& b) { return a.v >= b.v; }
};

template <std::size_t N>
inline double value(const Dual<N>& x) {
    return x.v;
}

// Applies the chain rule for a scalar function with known value and slope.
template <std::size_t N>
inline Dual<N> chain(const Dual<N>& x, double fx, double dfdx) {
    Dual<N> r(fx);
    for (std::size_t i = 0; i < N; ++i) r.d[i] = dfdx * x.d[i];
    return r;
}

template <std::size_t N>
inline Dual<N> sqrt(const Dual<N>& x) {
    const double s = std::sqrt(x.v);
    return chain(x, s, s > 0.0 ? 0.5 / s : 0.0);
}
template <std::size_t N>
inline Dual<N> exp(const Dual<N>& x) {
    const double e = std::exp(x.v);
    return chain(x, e, e);
}
template <std::size_t N>
inline Dual<N> log(const Dual<N>& x) {
    return chain(x, std::log(x.v), 1.0 / x.v);
}
template <std::size_t N>
inline Dual<N> sin(const Dual<N>& x) {
    return chain(x, std::sin(x.v), std::cos(x.v));
}
template <std::size_t N>
inline Dual<N> cos(const Dual<N>& x) {
    return chain(x, std::cos(x.v), -std::sin(x.v));
}
template <std::size_t N>
inline Dual<N> acos(const Dual<N>& x) {
    const double s = 1.0 - x.v * x.v;
    return chain(x, std::acos(x.v), s > 0.0 ? -1.0 / std::sqrt(s) : 0.0);
}
template <std::size_t N>
inline Dual<N> abs(const Dual<N>& x) {
    return x.v < 0.0 ? -x : x;
}
template <std::size_t N>
inline Dual<N> pow(const Dual<N>& x, double p) {
    const double y = std::pow(x.v, p);
    return chain(x, y, x.v != 0.0 ? p * y / x.v : 0.0);
}
template <std::size_t N>
inline Dual<N> atan2(const Dual<N>& y, const Dual<N>& x) {
    Dual<N> r(std::atan2(y.v, x.v));
    const double den = x.v * x.v + y.v * y.v;
    if (den > 0.0) {
        for (std::size_t i = 0; i < N; ++i) r.d[i] = (x.v * y.d[i] - y.v * x.d[i]) / den;
    }
    return r;
}

// Lifts a double-valued function of k Dual inputs into a Dual, given its value
// and gradient with respect to those inputs.
template <std::size_t N, std::size_t K>
inline Dual<N> lift(double fx, const std::array<double, K>& grad, const std::array<Dual<N>, K>& inputs) {
    Dual<N> r(fx);
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t i = 0; i < N; ++i) r.d[i] += grad[k] * inputs[k].d[i];
    return r;
}

template <std::size_t K>
inline double lift(double fx, const std::array<double, K>&, const std::array<double, K>&) {
    return fx;
}

}  // namespace polarsplat
