#pragma once

// Cube-map texel geometry: face parameterization, texel directions and solid
// angles, and bilinear sampling whose out-of-face taps are fetched from the
// adjacent face so lookups stay continuous across seams.

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "polarsplat/math.hpp"

namespace polarsplat {

inline constexpr int kCubeFaces = 6;

/// Face order +x, -x, +y, -y, +z, -z; (a, b) are face-plane coordinates in
/// [-1, 1].
inline Vec3d cubeFaceDirection(int face, double a, double b) {
    switch (face) {
        case 0: return {1.0, -b, -a};
        case 1: return {-1.0, -b, a};
        case 2: return {a, 1.0, b};
        case 3: return {a, -1.0, -b};
        case 4: return {a, -b, 1.0};
        default: return {-a, -b, -1.0};
    }
}

template <typename T>
struct FaceCoord {
    int face = 0;
    T a{}, b{};
};

/// Inverse of cubeFaceDirection; `dir` need not be normalized.
template <typename T>
FaceCoord<T> cubeFaceCoord(const Vec3<T>& dir) {
    const double ax = std::abs(value(dir.x)), ay = std::abs(value(dir.y)), az = std::abs(value(dir.z));
    FaceCoord<T> fc;
    if (ax >= ay && ax >= az) {
        if (value(dir.x) > 0.0) {
            fc = {0, -dir.z / dir.x, -dir.y / dir.x};
        } else {
            fc = {1, -dir.z / dir.x, dir.y / dir.x};
        }
    } else if (ay >= az) {
        if (value(dir.y) > 0.0) {
            fc = {2, dir.x / dir.y, dir.z / dir.y};
        } else {
            fc = {3, -dir.x / dir.y, dir.z / dir.y};
        }
    } else {
        if (value(dir.z) > 0.0) {
            fc = {4, dir.x / dir.z, -dir.y / dir.z};
        } else {
            fc = {5, dir.x / dir.z, dir.y / dir.z};
        }
    }
    return fc;
}

/// Texel layout of a cube with `resolution` texels per edge: unit texel
/// directions and exact texel solid angles (they sum to 4 pi).
struct CubeLayout {
    int resolution = 0;
    std::vector<double> dirX, dirY, dirZ;
    std::vector<double> solidAngle;

    explicit CubeLayout(int res) : resolution(res) {
        if (res < 1) throw std::invalid_argument("cube resolution must be >= 1");
        const std::size_t n = texelCount();
        dirX.resize(n);
        dirY.resize(n);
        dirZ.resize(n);
        solidAngle.resize(n);
        for (int f = 0; f < kCubeFaces; ++f)
            for (int j = 0; j < res; ++j)
                for (int i = 0; i < res; ++i) {
                    const std::size_t t = texelIndex(f, i, j);
                    const Vec3d d = texelDirection(f, i, j);
                    dirX[t] = d.x;
                    dirY[t] = d.y;
                    dirZ[t] = d.z;
                    const double a0 = 2.0 * i / res - 1.0, a1 = 2.0 * (i + 1) / res - 1.0;
                    const double b0 = 2.0 * j / res - 1.0, b1 = 2.0 * (j + 1) / res - 1.0;
                    solidAngle[t] = areaElement(a0, b0) - areaElement(a0, b1) - areaElement(a1, b0) + areaElement(a1, b1);
                }
    }

    std::size_t texelCount() const { return static_cast<std::size_t>(kCubeFaces) * resolution * resolution; }

    std::size_t texelIndex(int face, int i, int j) const {
        return (static_cast<std::size_t>(face) * resolution + j) * resolution + i;
    }

    double planeCoord(double i) const { return 2.0 * (i + 0.5) / resolution - 1.0; }

    /// Unit direction through the center of texel (i, j); i and j may lie one
    /// texel outside the face, giving the extrapolated direction.
    Vec3d texelDirection(int face, int i, int j) const {
        return normalize(cubeFaceDirection(face, planeCoord(i), planeCoord(j)));
    }

    Vec3d direction(std::size_t t) const { return {dirX[t], dirY[t], dirZ[t]}; }

    /// Texel containing `dir`.
    std::size_t nearestTexel(const Vec3d& dir) const {
        const FaceCoord<double> fc = cubeFaceCoord(dir);
        const int i = clampTexel(static_cast<int>(std::floor((fc.a + 1.0) * 0.5 * resolution)));
        const int j = clampTexel(static_cast<int>(std::floor((fc.b + 1.0) * 0.5 * resolution)));
        return texelIndex(fc.face, i, j);
    }

    /// Texel for a possibly out-of-face index: in-range indices map directly,
    /// the one-texel ring outside the face maps to the neighboring face.
    std::size_t resolveTexel(int face, int i, int j) const {
        if (i >= 0 && i < resolution && j >= 0 && j < resolution) return texelIndex(face, i, j);
        return nearestTexel(cubeFaceDirection(face, planeCoord(i), planeCoord(j)));
    }

private:
    int clampTexel(int v) const { return v < 0 ? 0 : (v >= resolution ? resolution - 1 : v); }

    static double areaElement(double x, double y) { return std::atan2(x * y, std::sqrt(x * x + y * y + 1.0)); }
};

inline std::shared_ptr<const CubeLayout> makeCubeLayout(int resolution) {
    return std::make_shared<const CubeLayout>(resolution);
}

/// One bilinear tap: texel index and weight.
struct Tap {
    std::uint32_t texel = 0;
    double weight = 0.0;
};

/// Bilinear taps (and their weights as functions of `dir`) for a seamless
/// lookup. Weights sum to one.
template <typename T>
struct BilinearTaps {
    std::array<std::uint32_t, 4> texel{};
    std::array<T, 4> weight{};
};

template <typename T>
BilinearTaps<T> bilinearTaps(const CubeLayout& layout, const Vec3<T>& dir) {
    using std::floor;
    const FaceCoord<T> fc = cubeFaceCoord(dir);
    const double res = layout.resolution;
    const T x = (fc.a + 1.0) * (0.5 * res) - 0.5;
    const T y = (fc.b + 1.0) * (0.5 * res) - 0.5;
    const int i0 = static_cast<int>(std::floor(value(x)));
    const int j0 = static_cast<int>(std::floor(value(y)));
    const T fx = x - double(i0);
    const T fy = y - double(j0);
    BilinearTaps<T> taps;
    taps.texel[0] = static_cast<std::uint32_t>(layout.resolveTexel(fc.face, i0, j0));
    taps.texel[1] = static_cast<std::uint32_t>(layout.resolveTexel(fc.face, i0 + 1, j0));
    taps.texel[2] = static_cast<std::uint32_t>(layout.resolveTexel(fc.face, i0, j0 + 1));
    taps.texel[3] = static_cast<std::uint32_t>(layout.resolveTexel(fc.face, i0 + 1, j0 + 1));
    taps.weight[0] = (1.0 - fx) * (1.0 - fy);
    taps.weight[1] = fx * (1.0 - fy);
    taps.weight[2] = (1.0 - fx) * fy;
    taps.weight[3] = fx * fy;
    return taps;
}

}  // namespace polarsplat
