#pragma once

// World-space ray casting against surfels. A ray hits a surfel when it crosses
// the surfel plane at a point where opacity * G(u, v) >= a response threshold
// (0.5 by default), i.e. inside the ellipse u^2 + v^2 <= 2 ln(2 opacity).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "polarsplat/math.hpp"
#include "polarsplat/surfel.hpp"

namespace polarsplat {

struct Aabb {
    Vec3d lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::max()};
    Vec3d hi{-std::numeric_limits<double>::max(), -std::numeric_limits<double>::max(),
             -std::numeric_limits<double>::max()};

    void extend(const Vec3d& p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    void extend(const Aabb& b) {
        extend(b.lo);
        extend(b.hi);
    }
    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y && lo.z <= hi.z; }
    Vec3d center() const { return (lo + hi) * 0.5; }
    Vec3d extent() const { return hi - lo; }
    double diagonal() const { return length(extent()); }

    Aabb scaled(double factor) const {
        const Vec3d c = center();
        const Vec3d h = extent() * (0.5 * factor);
        return {c - h, c + h};
    }

    // Slab test; returns whether [tMin, tMax] overlaps the box.
    bool hit(const Vec3d& o, const Vec3d& invDir, double tMin, double tMax) const {
        for (int a = 0; a < 3; ++a) {
            double t0 = (lo[static_cast<std::size_t>(a)] - o[static_cast<std::size_t>(a)]) * invDir[static_cast<std::size_t>(a)];
            double t1 = (hi[static_cast<std::size_t>(a)] - o[static_cast<std::size_t>(a)]) * invDir[static_cast<std::size_t>(a)];
            if (t0 > t1) std::swap(t0, t1);
            tMin = std::max(tMin, t0);
            tMax = std::min(tMax, t1);
            if (tMax < tMin) return false;
        }
        return true;
    }
};

/// Axis-aligned bounds of the surfel centers padded by each surfel's larger
/// scale, so flat scenes still give a box with volume.
inline Aabb sceneBounds(const std::vector<SurfelGaussian>& scene) {
    Aabb box;
    for (const auto& g : scene) {
        const double r = std::max(g.scaleU, g.scaleV);
        box.extend(g.position - Vec3d{r, r, r});
        box.extend(g.position + Vec3d{r, r, r});
    }
    return box;
}

struct TraceHit {
    int surfel = -1;
    double t = 0.0;
    double u = 0.0;
    double v = 0.0;
};

/// Bounding volume hierarchy over surfel hit discs.
class SurfelTracer {
public:
    explicit SurfelTracer(const std::vector<SurfelGaussian>& scene, double minResponse = 0.5)
        : scene_(&scene), minResponse_(minResponse) {
        std::vector<int> items;
        for (std::size_t i = 0; i < scene.size(); ++i) {
            const auto& g = scene[i];
            if (g.opacity < minResponse_ || !(g.scaleU > 0.0) || !(g.scaleV > 0.0)) continue;
            const double radius2 = 2.0 * std::log(g.opacity / minResponse_);
            Aabb b;
            const double r = std::sqrt(std::max(radius2, 0.0));
            // Extent of the disc along each world axis.
            for (int a = 0; a < 3; ++a) {
                const double e = r * std::hypot(g.scaleU * g.tangentU[static_cast<std::size_t>(a)],
                                                g.scaleV * g.tangentV[static_cast<std::size_t>(a)]) + 1e-9;
                b.lo[static_cast<std::size_t>(a)] = g.position[static_cast<std::size_t>(a)] - e;
                b.hi[static_cast<std::size_t>(a)] = g.position[static_cast<std::size_t>(a)] + e;
            }
            bounds_.push_back(b);
            radius2_.push_back(radius2);
            items.push_back(static_cast<int>(i));
        }
        indices_ = items;
        std::vector<int> local(items.size());
        for (std::size_t i = 0; i < local.size(); ++i) local[i] = static_cast<int>(i);
        order_.clear();
        if (!local.empty()) build(local, 0, local.size());
    }

    std::optional<TraceHit> nearestHit(const Vec3d& origin, const Vec3d& dir, double tMin = 0.0,
                                       double tMax = std::numeric_limits<double>::infinity()) const {
        return traverse(origin, dir, tMin, tMax, false);
    }

    bool occluded(const Vec3d& origin, const Vec3d& dir, double tMin = 0.0,
                  double tMax = std::numeric_limits<double>::infinity()) const {
        return traverse(origin, dir, tMin, tMax, true).has_value();
    }

    std::size_t primitiveCount() const { return order_.size(); }

private:
    struct Node {
        Aabb box;
        int left = -1, right = -1;
        std::size_t begin = 0, end = 0;
    };

    int build(std::vector<int>& items, std::size_t begin, std::size_t end) {
        Node node;
        Aabb centers;
        for (std::size_t i = begin; i < end; ++i) {
            node.box.extend(bounds_[static_cast<std::size_t>(items[i])]);
            centers.extend(bounds_[static_cast<std::size_t>(items[i])].center());
        }
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(node);
        if (end - begin <= 4) {
            nodes_[static_cast<std::size_t>(id)].begin = order_.size();
            for (std::size_t i = begin; i < end; ++i) order_.push_back(items[i]);
            nodes_[static_cast<std::size_t>(id)].end = order_.size();
            return id;
        }
        const Vec3d ext = centers.extent();
        const std::size_t axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
        const std::size_t mid = begin + (end - begin) / 2;
        std::nth_element(items.begin() + static_cast<long>(begin), items.begin() + static_cast<long>(mid),
                         items.begin() + static_cast<long>(end), [&](int a, int b) {
                             const double ca = bounds_[static_cast<std::size_t>(a)].center()[axis];
                             const double cb = bounds_[static_cast<std::size_t>(b)].center()[axis];
                             return ca != cb ? ca < cb : a < b;
                         });
        const int l = build(items, begin, mid);
        const int r = build(items, mid, end);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    std::optional<TraceHit> traverse(const Vec3d& o, const Vec3d& d, double tMin, double tMax, bool any) const {
        if (nodes_.empty()) return std::nullopt;
        const Vec3d inv{1.0 / d.x, 1.0 / d.y, 1.0 / d.z};
        std::optional<TraceHit> best;
        std::array<int, 128> stack{};
        int top = 0;
        stack[static_cast<std::size_t>(top++)] = 0;
        while (top > 0) {
            const Node& node = nodes_[static_cast<std::size_t>(stack[static_cast<std::size_t>(--top)])];
            if (!node.box.hit(o, inv, tMin, tMax)) continue;
            if (node.left < 0) {
                for (std::size_t k = node.begin; k < node.end; ++k) {
                    const int local = order_[k];
                    auto h = hitSurfel(local, o, d, tMin, tMax);
                    if (!h) continue;
                    if (any) return h;
                    if (!best || h->t < best->t || (h->t == best->t && h->surfel < best->surfel)) {
                        best = h;
                        tMax = h->t;
                    }
                }
                continue;
            }
            stack[static_cast<std::size_t>(top++)] = node.left;
            stack[static_cast<std::size_t>(top++)] = node.right;
        }
        return best;
    }

    std::optional<TraceHit> hitSurfel(int local, const Vec3d& o, const Vec3d& d, double tMin, double tMax) const {
        const int index = indices_[static_cast<std::size_t>(local)];
        const SurfelGaussian& g = (*scene_)[static_cast<std::size_t>(index)];
        const Vec3d n = g.normal();
        const double denom = dot(d, n);
        if (std::abs(denom) < 1e-12) return std::nullopt;
        const double t = dot(g.position - o, n) / denom;
        if (!(t > tMin) || !(t < tMax)) return std::nullopt;
        const Vec3d rel = o + d * t - g.position;
        const double u = dot(rel, g.tangentU) / g.scaleU;
        const double v = dot(rel, g.tangentV) / g.scaleV;
        if (u * u + v * v > radius2_[static_cast<std::size_t>(local)]) return std::nullopt;
        return TraceHit{index, t, u, v};
    }

    const std::vector<SurfelGaussian>* scene_;
    double minResponse_;
    std::vector<Aabb> bounds_;
    std::vector<double> radius2_;
    std::vector<int> indices_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
};

}  // namespace polarsplat
