#pragma once

// 2D Gaussian surfels, pinhole cameras, ray-splat intersection and
// front-to-back alpha blending of surfel attributes into a G-buffer.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "polarsplat/activations.hpp"
#include "polarsplat/math.hpp"
#include "polarsplat/parallel.hpp"

namespace polarsplat {

/// Planar Gaussian primitive. Tangents are unit and orthogonal; the normal
/// is tangentU x tangentV.
struct SurfelGaussian {
    Vec3d position{};
    Vec3d tangentU{1.0, 0.0, 0.0};
    Vec3d tangentV{0.0, 1.0, 0.0};
    double scaleU = 1.0;
    double scaleV = 1.0;
    double opacity = 1.0;
    Rgb albedo{0.5, 0.5, 0.5};
    double roughness = 0.5;
    double iorLatent = 0.0;

    Vec3d normal() const { return cross(tangentU, tangentV); }
    double ior() const { return iorActivation(iorLatent); }

    void validate() const {
        const double tol = 1e-6;
        if (std::abs(length(tangentU) - 1.0) > tol || std::abs(length(tangentV) - 1.0) > tol ||
            std::abs(dot(tangentU, tangentV)) > tol)
            throw std::invalid_argument("surfel tangents must be orthonormal");
        if (!(scaleU > 0.0) || !(scaleV > 0.0)) throw std::invalid_argument("surfel scales must be positive");
        if (opacity < 0.0 || opacity > 1.0) throw std::invalid_argument("surfel opacity must lie in [0,1]");
        if (roughness < kRoughnessMin - 1e-12 || roughness > 1.0)
            throw std::invalid_argument("surfel roughness must lie in [0.08,1]");
    }
};

template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    std::vector<T> pixels;

    Image() = default;
    Image(int w, int h, const T& fill = T{}) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    T& at(int x, int y) { return pixels[index(x, y)]; }
    const T& at(int x, int y) const { return pixels[index(x, y)]; }
    std::size_t size() const { return pixels.size(); }
    bool sameShape(int w, int h) const { return width == w && height == h; }
};

/// Pinhole camera with OpenCV axes: x right, y down, z forward. Pixel (i, j)
/// is sampled at image coordinates (i + 0.5, j + 0.5).
struct Camera {
    Mat3d rotation = Mat3d::identity();  // world -> camera
    Vec3d translation{};
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    int width = 1, height = 1;

    Vec3d toCamera(const Vec3d& world) const { return rotation * world + translation; }
    Vec3d center() const { return -(rotation.transposed() * translation); }
    Vec3d axisX() const { return rotation.row(0); }
    Vec3d axisY() const { return rotation.row(1); }
    Vec3d axisZ() const { return rotation.row(2); }

    /// Camera-space ray direction with unit z component, so the ray parameter
    /// equals camera depth.
    Vec3d rayDirection(double px, double py) const { return {(px - cx) / fx, (py - cy) / fy, 1.0}; }
    Vec3d pixelRay(int x, int y) const { return rayDirection(x + 0.5, y + 0.5); }
    Vec3d worldRay(int x, int y) const { return rotation.transposed() * pixelRay(x, y); }

    std::array<double, 2> project(const Vec3d& world) const {
        const Vec3d c = toCamera(world);
        return {fx * c.x / c.z + cx, fy * c.y / c.z + cy};
    }

    /// 4x4 world-to-camera matrix, row-major.
    std::array<double, 16> worldToCamera() const {
        return {rotation(0, 0), rotation(0, 1), rotation(0, 2), translation.x,
                rotation(1, 0), rotation(1, 1), rotation(1, 2), translation.y,
                rotation(2, 0), rotation(2, 1), rotation(2, 2), translation.z,
                0.0, 0.0, 0.0, 1.0};
    }

    void validate() const {
        const Mat3d should = rotation * rotation.transposed();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (std::abs(should(r, c) - (r == c ? 1.0 : 0.0)) > 1e-9)
                    throw std::invalid_argument("camera rotation is not orthonormal");
        if (width <= 0 || height <= 0) throw std::invalid_argument("camera size must be positive");
    }

    /// Camera at `eye` looking at `target`; `up` is the approximate world up
    /// (image y grows opposite to it). fovY in radians.
    static Camera lookAt(const Vec3d& eye, const Vec3d& target, const Vec3d& up, int width, int height,
                         double fovY) {
        const Vec3d forward = normalize(target - eye);
        Vec3d right = cross(forward, up);
        if (length(right) < 1e-12) right = cross(forward, Vec3d{1.0, 0.0, 0.0});
        right = normalize(right);
        const Vec3d down = cross(forward, right);
        Camera cam;
        cam.rotation.m = {right.x, right.y, right.z, down.x, down.y, down.z, forward.x, forward.y, forward.z};
        cam.translation = -(cam.rotation * eye);
        cam.width = width;
        cam.height = height;
        cam.fy = 0.5 * height / std::tan(0.5 * fovY);
        cam.fx = cam.fy;
        cam.cx = 0.5 * width;
        cam.cy = 0.5 * height;
        return cam;
    }
};

/// Surfel axes expressed in camera space: the plane point is
/// center + u * axisU + v * axisV.
template <typename T>
struct SplatFrame {
    Vec3<T> center, axisU, axisV;
};

template <typename T>
struct SplatHit {
    T u{}, v{}, z{};
};

inline SplatFrame<double> splatFrame(const Camera& cam, const SurfelGaussian& g) {
    return {cam.toCamera(g.position), cam.rotation * (g.tangentU * g.scaleU),
            cam.rotation * (g.tangentV * g.scaleV)};
}

/// Solves center + u axisU + v axisV = z * dir (dir has unit z) by Cramer's
/// rule. Returns nothing for rays parallel to the plane, hits at z <= 0, and
/// degenerate frames.
template <typename T>
std::optional<SplatHit<T>> intersectSplat(const SplatFrame<T>& f, const Vec3d& dir) {
    const Vec3<T> c = -Vec3<T>(dir);
    const Vec3<T> r = -f.center;
    const Vec3<T> bc = cross(f.axisV, c);
    const T det = dot(f.axisU, bc);
    const double scale = value(length(f.axisU)) * value(length(f.axisV)) * length(dir);
    if (!(scale > 1e-24)) return std::nullopt;
    if (std::abs(value(det)) <= 1e-12 * scale) return std::nullopt;
    SplatHit<T> hit;
    hit.u = dot(r, bc) / det;
    hit.v = dot(f.axisU, cross(r, c)) / det;
    hit.z = dot(f.axisU, cross(f.axisV, r)) / det;
    if (!(value(hit.z) > 0.0)) return std::nullopt;
    return hit;
}

inline std::optional<SplatHit<double>> raySplatIntersect(const Camera& cam, int x, int y, const SurfelGaussian& g) {
    if (!(g.scaleU > 1e-12) || !(g.scaleV > 1e-12)) return std::nullopt;
    return intersectSplat(splatFrame(cam, g), cam.pixelRay(x, y));
}

template <typename T>
inline T gaussianWeight(const T& u, const T& v) {
    using std::exp;
    return exp(-(u * u + v * v) * 0.5);
}

inline constexpr double kMinSplatWeight = 1.0 / 255.0;
inline constexpr double kTransmittanceCutoff = 1e-4;
/// Plane radius (in scale units) where the Gaussian weight reaches 1/255.
inline const double kSplatCutoffRadius = std::sqrt(2.0 * std::log(255.0));

/// Per-pixel, per-surfel state of the forward blend.
struct Contribution {
    int surfel = 0;
    double z = 0.0;
    double u = 0.0;
    double v = 0.0;
    double alpha = 0.0;
};

/// Alpha-blended surfel attributes. Albedo, roughness, ior, depth and
/// position hold the raw blended sums sum(a_i T_i alpha_i); dividing by
/// opacity gives the expected value. `normal` is the renormalized blended
/// normal (zero where nothing was blended).
struct GBuffer {
    int width = 0;
    int height = 0;
    std::vector<Rgb> albedo;
    std::vector<Vec3d> normalSum;
    std::vector<Vec3d> normal;
    std::vector<double> roughness;
    std::vector<double> ior;
    std::vector<double> depth;
    std::vector<double> opacity;
    std::vector<Vec3d> position;

    GBuffer() = default;
    GBuffer(int w, int h)
        : width(w),
          height(h),
          albedo(count(w, h)),
          normalSum(count(w, h)),
          normal(count(w, h)),
          roughness(count(w, h)),
          ior(count(w, h)),
          depth(count(w, h)),
          opacity(count(w, h)),
          position(count(w, h)) {}

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width + x; }
    std::size_t size() const { return opacity.size(); }

    Rgb meanAlbedo(std::size_t i) const { return opacity[i] > 0.0 ? albedo[i] / opacity[i] : Rgb{}; }
    double meanRoughness(std::size_t i) const { return opacity[i] > 0.0 ? roughness[i] / opacity[i] : 0.0; }
    double meanIor(std::size_t i) const { return opacity[i] > 0.0 ? ior[i] / opacity[i] : 0.0; }
    double meanDepth(std::size_t i) const { return opacity[i] > 0.0 ? depth[i] / opacity[i] : 0.0; }
    Vec3d meanPosition(std::size_t i) const { return opacity[i] > 0.0 ? position[i] / opacity[i] : Vec3d{}; }

    bool operator==(const GBuffer& o) const = default;

private:
    static std::size_t count(int w, int h) { return static_cast<std::size_t>(w) * static_cast<std::size_t>(h); }
};

/// Sorted contribution list of every pixel, kept for the backward pass.
using RasterTrace = std::vector<std::vector<Contribution>>;

namespace detail {

struct PixelRect {
    int x0, y0, x1, y1;  // inclusive
    bool empty() const { return x0 > x1 || y0 > y1; }
};

// Conservative screen rectangle of the surfel's cutoff ellipse: the
// perspective image of the bounding square in the surfel plane.
inline PixelRect screenBounds(const Camera& cam, const SurfelGaussian& g) {
    const double r = kSplatCutoffRadius;
    const Vec3d du = g.tangentU * (g.scaleU * r);
    const Vec3d dv = g.tangentV * (g.scaleV * r);
    double minX = 1e300, minY = 1e300, maxX = -1e300, maxY = -1e300;
    for (int i = 0; i < 4; ++i) {
        const Vec3d corner = g.position + du * ((i & 1) ? 1.0 : -1.0) + dv * ((i & 2) ? 1.0 : -1.0);
        const Vec3d c = cam.toCamera(corner);
        if (c.z <= 1e-9) return {0, 0, cam.width - 1, cam.height - 1};
        const double px = cam.fx * c.x / c.z + cam.cx;
        const double py = cam.fy * c.y / c.z + cam.cy;
        minX = std::min(minX, px);
        maxX = std::max(maxX, px);
        minY = std::min(minY, py);
        maxY = std::max(maxY, py);
    }
    auto clampi = [](double v, int lo, int hi) {
        if (v < lo) return lo;
        if (v > hi) return hi;
        return static_cast<int>(v);
    };
    PixelRect rect{clampi(std::floor(minX - 1.5), 0, cam.width - 1), clampi(std::floor(minY - 1.5), 0, cam.height - 1),
                   clampi(std::ceil(maxX + 0.5), -1, cam.width - 1), clampi(std::ceil(maxY + 0.5), -1, cam.height - 1)};
    if (maxX < -1.0 || maxY < -1.0 || minX > cam.width + 1.0 || minY > cam.height + 1.0) rect.x1 = -1;
    return rect;
}

}  // namespace detail

/// Front-to-back blend of one pixel's sorted contributions. Shared by the
/// rasterizer and the backward pass so both see the same truncation.
template <typename Visit>
inline void blendPixel(const std::vector<Contribution>& sorted, Visit&& visit) {
    double transmittance = 1.0;
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double alpha = sorted[k].alpha;
        visit(k, transmittance * alpha, transmittance);
        transmittance *= 1.0 - alpha;
        if (transmittance < kTransmittanceCutoff) break;
    }
}

inline bool contributionOrder(const Contribution& a, const Contribution& b) {
    if (a.z != b.z) return a.z < b.z;
    return a.surfel < b.surfel;
}

/// Collects every surfel hitting each pixel with weight >= 1/255, sorted by
/// depth (ties by surfel index).
inline RasterTrace collectContributions(const std::vector<SurfelGaussian>& scene, const Camera& cam) {
    RasterTrace lists(static_cast<std::size_t>(cam.width) * cam.height);
    for (std::size_t s = 0; s < scene.size(); ++s) {
        const SurfelGaussian& g = scene[s];
        if (!(g.scaleU > 1e-12) || !(g.scaleV > 1e-12) || g.opacity <= 0.0) continue;
        const detail::PixelRect rect = detail::screenBounds(cam, g);
        if (rect.empty()) continue;
        const SplatFrame<double> frame = splatFrame(cam, g);
        for (int y = rect.y0; y <= rect.y1; ++y)
            for (int x = rect.x0; x <= rect.x1; ++x) {
                const auto hit = intersectSplat(frame, cam.pixelRay(x, y));
                if (!hit) continue;
                const double w = gaussianWeight(hit->u, hit->v);
                if (w < kMinSplatWeight) continue;
                lists[static_cast<std::size_t>(y) * cam.width + x].push_back(
                    {static_cast<int>(s), hit->z, hit->u, hit->v, g.opacity * w});
            }
    }
    for (auto& l : lists) std::sort(l.begin(), l.end(), contributionOrder);
    return lists;
}

/// Rasterizes the scene into a G-buffer. When `trace` is given it receives
/// the per-pixel sorted contributions.
inline GBuffer rasterize(const std::vector<SurfelGaussian>& scene, const Camera& cam, RasterTrace* trace = nullptr) {
    RasterTrace lists = collectContributions(scene, cam);
    GBuffer gb(cam.width, cam.height);
    const Mat3d camToWorld = cam.rotation.transposed();
    const Vec3d origin = cam.center();
    parallelFor(lists.size(), [&](std::size_t i) {
        const int x = static_cast<int>(i % static_cast<std::size_t>(cam.width));
        const int y = static_cast<int>(i / static_cast<std::size_t>(cam.width));
        const Vec3d rayWorld = camToWorld * cam.pixelRay(x, y);
        blendPixel(lists[i], [&](std::size_t k, double w, double) {
            const Contribution& c = lists[i][k];
            const SurfelGaussian& g = scene[static_cast<std::size_t>(c.surfel)];
            gb.albedo[i] += g.albedo * w;
            gb.normalSum[i] += g.normal() * w;
            gb.roughness[i] += g.roughness * w;
            gb.ior[i] += g.ior() * w;
            gb.depth[i] += c.z * w;
            gb.position[i] += (origin + rayWorld * c.z) * w;
            gb.opacity[i] += w;
        });
        const double len = length(gb.normalSum[i]);
        gb.normal[i] = (gb.opacity[i] > 0.0 && len > 1e-12) ? gb.normalSum[i] / len : Vec3d{};
    });
    if (trace) *trace = std::move(lists);
    return gb;
}

/// Normal of the surface through the unprojected neighbors of pixel (x, y),
/// given the four neighbor depths (left, right, up, down). Faces the camera
/// for front-facing geometry.
template <typename T>
Vec3<T> depthNormalFromNeighbors(const Camera& cam, int x, int y, const std::array<T, 4>& depths) {
    const Mat3d toWorld = cam.rotation.transposed();
    const Vec3d origin = cam.center();
    auto unproject = [&](int px, int py, const T& d) {
        return Vec3<T>(origin) + Vec3<T>(toWorld * cam.pixelRay(px, py)) * d;
    };
    const Vec3<T> dx = unproject(x + 1, y, depths[1]) - unproject(x - 1, y, depths[0]);
    const Vec3<T> dy = unproject(x, y + 1, depths[3]) - unproject(x, y - 1, depths[2]);
    const Vec3<T> n = cross(dy, dx);
    const T len = length(n);
    if (!(value(len) > 1e-300)) return {};
    return n / len;
}

/// Normal map from local depth gradients (central differences of the
/// unprojected expected depth). Zero where the pixel or any 4-neighbor has
/// zero opacity, and on the image border.
inline Image<Vec3d> depthToNormal(const GBuffer& gb, const Camera& cam) {
    Image<Vec3d> out(gb.width, gb.height);
    for (int y = 1; y + 1 < gb.height; ++y)
        for (int x = 1; x + 1 < gb.width; ++x) {
            const std::size_t c = gb.index(x, y);
            const std::array<std::size_t, 4> nb{gb.index(x - 1, y), gb.index(x + 1, y), gb.index(x, y - 1),
                                                gb.index(x, y + 1)};
            if (!(gb.opacity[c] > 0.0)) continue;
            bool ok = true;
            std::array<double, 4> d{};
            for (std::size_t k = 0; k < 4; ++k) {
                if (!(gb.opacity[nb[k]] > 0.0)) ok = false;
                d[k] = gb.meanDepth(nb[k]);
            }
            if (!ok) continue;
            out.at(x, y) = depthNormalFromNeighbors<double>(cam, x, y, d);
        }
    return out;
}

}  // namespace polarsplat
