#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace polarsplat {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInvPi = 1.0 / kPi;

// Scalar helpers that resolve to std:: for double and to ADL overloads for
// dual numbers.
template <typename T>
inline T sqr(const T& x) {
    return x * x;
}

inline double value(double x) { return x; }

template <typename T>
struct Vec3 {
    T x{}, y{}, z{};

    Vec3() = default;
    Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

    template <typename U, typename = std::enable_if_t<!std::is_same_v<U, T>>>
    explicit Vec3(const Vec3<U>& o) : x(T(o.x)), y(T(o.y)), z(T(o.z)) {}

    T& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    const T& operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3& operator+=(const Vec3& o) {
        x += o.x;
        y += o.y;
        z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x;
        y -= o.y;
        z -= o.z;
        return *this;
    }
    Vec3& operator*=(const T& s) {
        x *= s;
        y *= s;
        z *= s;
        return *this;
    }
};

using Vec3d = Vec3<double>;

template <typename T>
inline Vec3<T> operator+(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
template <typename T>
inline Vec3<T> operator-(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
template <typename T>
inline Vec3<T> operator-(const Vec3<T>& a) {
    return {-a.x, -a.y, -a.z};
}
template <typename T>
inline Vec3<T> operator*(const Vec3<T>& a, const T& s) {
    return {a.x * s, a.y * s, a.z * s};
}
template <typename T>
inline Vec3<T> operator*(const T& s, const Vec3<T>& a) {
    return {a.x * s, a.y * s, a.z * s};
}
template <typename T>
inline Vec3<T> operator/(const Vec3<T>& a, const T& s) {
    return {a.x / s, a.y / s, a.z / s};
}
// Mixed double/T products keep call sites free of explicit casts.
template <typename T, typename = std::enable_if_t<!std::is_same_v<T, double>>>
inline Vec3<T> operator*(const Vec3<T>& a, double s) {
    return {a.x * s, a.y * s, a.z * s};
}
template <typename T, typename = std::enable_if_t<!std::is_same_v<T, double>>>
inline Vec3<T> operator*(double s, const Vec3<T>& a) {
    return {a.x * s, a.y * s, a.z * s};
}

template <typename T>
inline bool operator==(const Vec3<T>& a, const Vec3<T>& b) {
    return a.x == b.x && a.y == b.y && a.z == b.z;
}

template <typename T>
inline T dot(const Vec3<T>& a, const Vec3<T>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}
template <typename T>
inline Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
template <typename T>
inline T length(const Vec3<T>& a) {
    using std::sqrt;
    return sqrt(dot(a, a));
}
template <typename T>
inline Vec3<T> normalize(const Vec3<T>& a) {
    return a / length(a);
}
template <typename T>
inline Vec3<T> hadamard(const Vec3<T>& a, const Vec3<T>& b) {
    return {a.x * b.x, a.y * b.y, a.z * b.z};
}

// Mirror of `w` about `n`; both point away from the surface.
template <typename T>
inline Vec3<T> reflect(const Vec3<T>& w, const Vec3<T>& n) {
    return n * (T(2.0) * dot(w, n)) - w;
}

inline Vec3d valueOf(const Vec3d& v) { return v; }

/// Row-major 3x3 matrix.
template <typename T>
struct Mat3 {
    std::array<T, 9> m{};

    static Mat3 identity() {
        Mat3 r;
        r.m = {T(1.0), T(0.0), T(0.0), T(0.0), T(1.0), T(0.0), T(0.0), T(0.0), T(1.0)};
        return r;
    }
    T& operator()(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }
    const T& operator()(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }

    Vec3<T> row(int r) const { return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2)}; }
    Vec3<T> col(int c) const { return {(*this)(0, c), (*this)(1, c), (*this)(2, c)}; }

    Mat3 transposed() const {
        Mat3 t;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) t(r, c) = (*this)(c, r);
        return t;
    }
};

using Mat3d = Mat3<double>;

template <typename T>
inline Vec3<T> operator*(const Mat3<T>& a, const Vec3<T>& v) {
    return {dot(a.row(0), v), dot(a.row(1), v), dot(a.row(2), v)};
}

template <typename T>
inline Mat3<T> operator*(const Mat3<T>& a, const Mat3<T>& b) {
    Mat3<T> r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            T s = T(0.0);
            for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

// Rodrigues map from an axis-angle vector to a rotation matrix; uses the
// second-order series near the origin so the map stays smooth at zero.
template <typename T>
inline Mat3<T> rotationFromAxisAngle(const Vec3<T>& w) {
    using std::cos;
    using std::sin;
    using std::sqrt;
    const T theta2 = dot(w, w);
    T a, b;
    if (value(theta2) < 1e-12) {
        a = T(1.0) - theta2 / 6.0;
        b = T(0.5) - theta2 / 24.0;
    } else {
        const T theta = sqrt(theta2);
        a = sin(theta) / theta;
        b = (T(1.0) - cos(theta)) / theta2;
    }
    Mat3<T> k;
    k.m = {T(0.0), -w.z, w.y, w.z, T(0.0), -w.x, -w.y, w.x, T(0.0)};
    Mat3<T> r = Mat3<T>::identity();
    const Mat3<T> k2 = k * k;
    for (std::size_t i = 0; i < 9; ++i) r.m[i] = r.m[i] + a * k.m[i] + b * k2.m[i];
    return r;
}

/// Linear RGB triple.
using Rgb = Vec3d;

inline Rgb rgb(double v) { return {v, v, v}; }

}  // namespace polarsplat
