#pragma once

// Stokes/Mueller algebra and dielectric Fresnel coefficients.
//
// Frame convention (used by every module): the Stokes reference axis is the
// camera's +y axis projected onto the image plane, so light linearly
// polarized along +y_cam has s1 > 0. Angles (polarizer orientation, AoP,
// rotation) are measured from +y_cam toward the direction that makes
// positive s2, i.e. a polarizer at theta passes s0 + cos2t s1 + sin2t s2.

#include <array>
#include <cmath>
#include <stdexcept>

#include "polarsplat/math.hpp"

namespace polarsplat {

/// Linear polarization state per RGB channel. s3 is carried for algebra but
/// the shading path only ever produces s3 = 0.
struct SpectralStokes {
    Rgb s0{}, s1{}, s2{}, s3{};

    static SpectralStokes unpolarized(const Rgb& intensity) { return {intensity, {}, {}, {}}; }

    SpectralStokes& operator+=(const SpectralStokes& o) {
        s0 += o.s0;
        s1 += o.s1;
        s2 += o.s2;
        s3 += o.s3;
        return *this;
    }
    friend SpectralStokes operator+(SpectralStokes a, const SpectralStokes& b) { return a += b; }
    friend SpectralStokes operator*(const SpectralStokes& a, double k) {
        return {a.s0 * k, a.s1 * k, a.s2 * k, a.s3 * k};
    }
    friend bool operator==(const SpectralStokes& a, const SpectralStokes& b) {
        return a.s0 == b.s0 && a.s1 == b.s1 && a.s2 == b.s2 && a.s3 == b.s3;
    }

    std::array<double, 4> channel(int c) const {
        return {s0[static_cast<std::size_t>(c)], s1[static_cast<std::size_t>(c)],
                s2[static_cast<std::size_t>(c)], s3[static_cast<std::size_t>(c)]};
    }
};

/// True when every channel has s0 >= 0 and degree of polarization <= 1 (+eps).
inline bool isPhysical(const SpectralStokes& s, double eps = 1e-9) {
    for (int c = 0; c < 3; ++c) {
        const auto v = s.channel(c);
        if (v[0] < -eps) return false;
        if (std::sqrt(v[1] * v[1] + v[2] * v[2] + v[3] * v[3]) > v[0] + eps) return false;
    }
    return true;
}

struct MuellerMatrix {
    std::array<std::array<double, 4>, 4> m{};

    static MuellerMatrix identity() {
        MuellerMatrix r;
        for (int i = 0; i < 4; ++i) r.m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1.0;
        return r;
    }
    double operator()(int r, int c) const { return m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }
    double& operator()(int r, int c) { return m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]; }

    std::array<double, 4> apply(const std::array<double, 4>& s) const {
        std::array<double, 4> out{};
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) out[static_cast<std::size_t>(r)] += (*this)(r, c) * s[static_cast<std::size_t>(c)];
        return out;
    }
};

inline MuellerMatrix operator*(const MuellerMatrix& a, const MuellerMatrix& b) {
    MuellerMatrix r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            double s = 0.0;
            for (int k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

/// Fresnel power coefficients for light entering a dielectric from air.
template <typename T = double>
struct FresnelSet {
    T tPerp{}, tPar{}, rPerp{}, rPar{};
    T cosTheta1{}, cosTheta2{};
    double eta1 = 1.0;
    T eta2{};
};

/// Fresnel coefficients for incidence from air (eta1 = 1) onto a medium of
/// index `eta` at incidence cosine `cosTheta1`. Throws std::domain_error for
/// back-facing or grazing incidence (cosTheta1 <= 0) and for eta < 1.
template <typename T>
FresnelSet<T> fresnel(const T& eta, const T& cosTheta1) {
    using std::sqrt;
    if (!(value(cosTheta1) > 0.0)) throw std::domain_error("fresnel: cosTheta1 must be positive");
    if (!(value(eta) >= 1.0)) throw std::domain_error("fresnel: eta must be >= 1");
    const T c1 = value(cosTheta1) > 1.0 ? T(1.0) : cosTheta1;
    const T sin2 = T(1.0) - c1 * c1;
    const T c2 = sqrt(T(1.0) - sin2 / (eta * eta));

    const T perpDen = c1 + eta * c2;
    const T parDen = c2 + eta * c1;
    FresnelSet<T> f;
    f.cosTheta1 = c1;
    f.cosTheta2 = c2;
    f.eta2 = eta;
    f.tPerp = sqr(T(2.0) * c1 / perpDen);
    f.tPar = sqr(T(2.0) * c1 / parDen);
    f.rPerp = sqr((c1 - eta * c2) / perpDen);
    f.rPar = sqr((c2 - eta * c1) / parDen);
    return f;
}

inline FresnelSet<double> fresnel(double eta, double cosTheta1) { return fresnel<double>(eta, cosTheta1); }

/// Specular polarization factor (R_perp - R_par) / (R_perp + R_par), in [0, 1].
template <typename T>
T betaSpec(const FresnelSet<T>& f) {
    const T sum = f.rPerp + f.rPar;
    if (!(value(sum) > 0.0)) return T(0.0);
    return (f.rPerp - f.rPar) / sum;
}

/// Diffuse polarization factor (T_perp - T_par) / (T_perp + T_par), in [-1, 0].
template <typename T>
T betaDiff(const FresnelSet<T>& f) {
    const T sum = f.tPerp + f.tPar;
    if (!(value(sum) > 0.0)) return T(0.0);
    return (f.tPerp - f.tPar) / sum;
}

/// Ideal linear polarizer at orientation theta (radians).
inline MuellerMatrix muellerLP(double theta) {
    const double c = std::cos(2.0 * theta);
    const double s = std::sin(2.0 * theta);
    MuellerMatrix r;
    r.m = {{{0.5, 0.5 * c, 0.5 * s, 0.0},
            {0.5 * c, 0.5 * c * c, 0.5 * c * s, 0.0},
            {0.5 * s, 0.5 * c * s, 0.5 * s * s, 0.0},
            {0.0, 0.0, 0.0, 0.0}}};
    return r;
}

/// Stokes reference-frame rotation by phi: (s1, s2) -> (c s1 + s s2, -s s1 + c s2)
/// with c = cos 2phi, s = sin 2phi. muellerLP(t) = rotation(-t) * muellerLP(0) * rotation(t).
inline MuellerMatrix muellerRotation(double phi) {
    const double c = std::cos(2.0 * phi);
    const double s = std::sin(2.0 * phi);
    MuellerMatrix r = MuellerMatrix::identity();
    r(1, 1) = c;
    r(1, 2) = s;
    r(2, 1) = -s;
    r(2, 2) = c;
    return r;
}

inline SpectralStokes applyMueller(const MuellerMatrix& m, const SpectralStokes& s) {
    SpectralStokes out;
    for (std::size_t c = 0; c < 3; ++c) {
        const auto v = m.apply(s.channel(static_cast<int>(c)));
        out.s0[c] = v[0];
        out.s1[c] = v[1];
        out.s2[c] = v[2];
        out.s3[c] = v[3];
    }
    return out;
}

struct DopAop {
    Rgb dop{};
    Rgb aop{};
};

/// Degree and angle of linear polarization per channel; channels with s0 <= 0
/// report dop = aop = 0.
inline DopAop dopAop(const SpectralStokes& s) {
    DopAop r;
    for (std::size_t c = 0; c < 3; ++c) {
        if (!(s.s0[c] > 0.0)) continue;
        r.dop[c] = std::sqrt(s.s1[c] * s.s1[c] + s.s2[c] * s.s2[c]) / s.s0[c];
        r.aop[c] = 0.5 * std::atan2(s.s2[c], s.s1[c]);
    }
    return r;
}

}  // namespace polarsplat
