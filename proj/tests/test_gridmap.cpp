#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <tuple>

#include "polarsplat/gridmap.hpp"
#include "polarsplat/synth.hpp"

using namespace polarsplat;

namespace {

SpectralStokes grayStokes(double s0, double s1, double s2) { return {rgb(s0), rgb(s1), rgb(s2), Rgb{}}; }

const EnvCubeMipmap& constantEnv() {
    static const EnvCubeMipmap env = buildMipChain(16, constantEnvironment(16, rgb(0.7)));
    return env;
}

// Enumerates each face's 4x4 lattice separately, merges points that coincide
// and drops those strictly inside the bottom face.
std::vector<Vec3d> latticeOracle(const Aabb& box) {
    const Vec3d lo = box.lo, hi = box.hi;
    std::vector<Vec3d> pts;
    auto lerp = [](double a, double b, int k) { return a + (b - a) * k / 3.0; };
    for (int axis = 0; axis < 3; ++axis)
        for (int side = 0; side < 2; ++side)
            for (int a = 0; a < 4; ++a)
                for (int b = 0; b < 4; ++b) {
                    Vec3d p;
                    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
                    p[static_cast<std::size_t>(axis)] = side ? hi[static_cast<std::size_t>(axis)] : lo[static_cast<std::size_t>(axis)];
                    p[static_cast<std::size_t>(u)] = lerp(lo[static_cast<std::size_t>(u)], hi[static_cast<std::size_t>(u)], a);
                    p[static_cast<std::size_t>(v)] = lerp(lo[static_cast<std::size_t>(v)], hi[static_cast<std::size_t>(v)], b);
                    const bool bottomInterior = axis == 1 && side == 0 && a > 0 && a < 3 && b > 0 && b < 3;
                    if (bottomInterior) continue;
                    const bool dup = std::any_of(pts.begin(), pts.end(),
                                                 [&](const Vec3d& q) { return length(p - q) < 1e-9; });
                    if (!dup) pts.push_back(p);
                }
    // A bottom-interior point is also never produced by another face, so no
    // second pass is needed.
    return pts;
}

bool sameSet(std::vector<Vec3d> a, std::vector<Vec3d> b) {
    if (a.size() != b.size()) return false;
    for (const Vec3d& p : a) {
        auto it = std::find_if(b.begin(), b.end(), [&](const Vec3d& q) { return length(p - q) < 1e-9; });
        if (it == b.end()) return false;
        b.erase(it);
    }
    return true;
}

}  // namespace

TEST(PlaceAnchors, UnitCubeHas52) {
    const Aabb cube{{0, 0, 0}, {1, 1, 1}};
    const auto a = placeAnchors(cube);
    EXPECT_EQ(a.size(), 52u);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = i + 1; j < a.size(); ++j) EXPECT_GT(length(a[i] - a[j]), 1e-9);
}

TEST(PlaceAnchors, ContainsCorners) {
    const Aabb box{{-1, 0, 2}, {3, 1, 2.5}};
    const Aabb s = box.scaled(1.1);
    const auto a = placeAnchors(box);
    for (int c = 0; c < 8; ++c) {
        const Vec3d corner{(c & 1) ? s.hi.x : s.lo.x, (c & 2) ? s.hi.y : s.lo.y, (c & 4) ? s.hi.z : s.lo.z};
        EXPECT_TRUE(std::any_of(a.begin(), a.end(), [&](const Vec3d& p) { return length(p - corner) < 1e-9; }));
    }
}

TEST(PlaceAnchors, MatchesLatticeOracle) {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2.0, 2.0), e(0.1, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec3d lo{u(rng), u(rng), u(rng)};
        const Aabb box{lo, lo + Vec3d{e(rng), e(rng), e(rng)}};
        const Aabb s = box.scaled(kAnchorBoxScale);
        const auto a = placeAnchors(box);
        ASSERT_EQ(a.size(), 52u);
        EXPECT_TRUE(sameSet(a, latticeOracle(s)));
        const double tol = 1e-9 * (1.0 + s.diagonal());
        for (const Vec3d& p : a) {
            // On the surface: inside the box and on at least one face plane.
            bool onFace = false;
            for (std::size_t k = 0; k < 3; ++k) {
                EXPECT_GE(p[k], s.lo[k] - tol);
                EXPECT_LE(p[k], s.hi[k] + tol);
                onFace = onFace || std::abs(p[k] - s.lo[k]) < tol || std::abs(p[k] - s.hi[k]) < tol;
            }
            EXPECT_TRUE(onFace);
            const bool bottomInterior = std::abs(p.y - s.lo.y) < tol && p.x > s.lo.x + tol && p.x < s.hi.x - tol &&
                                        p.z > s.lo.z + tol && p.z < s.hi.z - tol;
            EXPECT_FALSE(bottomInterior);
        }
    }
}

TEST(PlaceAnchors, RejectsDegenerateBox) {
    EXPECT_THROW(placeAnchors(Aabb{{0, 0, 0}, {1, 0, 1}}), std::invalid_argument);
    EXPECT_THROW(placeAnchors(Aabb{}), std::invalid_argument);
}

TEST(LocalCubemap, EmptySceneCopiesGlobalMap) {
    const std::vector<SurfelGaussian> scene;
    const SurfelTracer tracer(scene);
    const EnvCubeMipmap env = buildMipChain(16, randomEnvironment(16, 4));
    const auto same = buildLocalCubemap({0.3, 0.1, -0.2}, scene, tracer, env, env.layout(0));
    EXPECT_TRUE(same == env.base());
    const CubeLayout coarse(8);
    const auto resampled = buildLocalCubemap({0, 0, 0}, scene, tracer, env, coarse);
    for (std::size_t t = 0; t < coarse.texelCount(); ++t)
        EXPECT_EQ(resampled[t], sampleLevel<double>(env, 0, coarse.direction(t)));
}

TEST(LocalCubemap, WhiteWallUnderConstantLight) {
    const double c = 0.7;
    SurfelMaterial white;
    white.albedo = rgb(1.0);
    // Large wall at z = 2 facing the anchor at the origin.
    const std::vector<SurfelGaussian> scene{orientedSurfel({0, 0, 2}, {0, 0, -1}, 50.0, white)};
    const SurfelTracer tracer(scene);
    const EnvCubeMipmap& env = constantEnv();
    const auto local = buildLocalCubemap({0, 0, 0}, scene, tracer, env, env.layout(0));
    int hits = 0;
    for (std::size_t t = 0; t < local.size(); ++t) {
        const Vec3d d = env.layout(0).direction(t);
        if (d.z > 0.5) {
            EXPECT_NEAR(local[t].x, c, 0.01 * c);
            ++hits;
        } else if (d.z < 0.0) {
            EXPECT_EQ(local[t], env.base()[t]);
        }
    }
    EXPECT_GT(hits, 100);
}

TEST(LocalCubemap, MissTexelsEqualGlobalSample) {
    const auto scene = sphereSurfels(200, 0.5, {0, 0, 0}, SurfelMaterial{});
    const SurfelTracer tracer(scene);
    const EnvCubeMipmap env = buildMipChain(16, randomEnvironment(16, 9));
    const Vec3d anchor{1.5, 0.2, 0.0};
    const auto local = buildLocalCubemap(anchor, scene, tracer, env, env.layout(0));
    int misses = 0;
    for (std::size_t t = 0; t < local.size(); ++t) {
        if (tracer.nearestHit(anchor, env.layout(0).direction(t))) continue;
        EXPECT_EQ(local[t], env.base()[t]);
        ++misses;
    }
    EXPECT_GT(misses, 1000);
}

TEST(LocalizedDiffuse, EqualInputsGiveInput) {
    const std::vector<Vec3d> anchors{{0, 0, 0}, {1, 2, 3}, {-4, 0, 1}};
    const SpectralStokes s = grayStokes(0.8, 0.1, -0.2);
    for (auto mode : {AnchorWeighting::Literal, AnchorWeighting::InverseDistance}) {
        const SpectralStokes r = localizedDiffuse({0.5, 0.5, 0.5}, {s, s, s}, anchors, mode);
        EXPECT_NEAR(r.s0.x, 0.8, 1e-15);
        EXPECT_NEAR(r.s1.y, 0.1, 1e-15);
        EXPECT_NEAR(r.s2.z, -0.2, 1e-15);
    }
}

TEST(LocalizedDiffuse, TwoAnchors) {
    const std::vector<Vec3d> anchors{{1, 0, 0}, {-3, 0, 0}};
    const SpectralStokes s1 = grayStokes(1.0, 0.2, 0.0), s2 = grayStokes(3.0, -0.4, 0.6);
    const SpectralStokes lit = localizedDiffuse({0, 0, 0}, {s1, s2}, anchors);
    EXPECT_NEAR(lit.s0.x, (1.0 * 1.0 + 3.0 * 3.0) / 4.0, 1e-15);
    EXPECT_NEAR(lit.s1.x, (1.0 * 0.2 + 3.0 * -0.4) / 4.0, 1e-15);
    EXPECT_NEAR(lit.s2.x, (3.0 * 0.6) / 4.0, 1e-15);
    const SpectralStokes inv = localizedDiffuse({0, 0, 0}, {s1, s2}, anchors, AnchorWeighting::InverseDistance);
    EXPECT_NEAR(inv.s0.x, (1.0 / 1.0 + 3.0 / 3.0) / (1.0 + 1.0 / 3.0), 1e-15);
}

TEST(LocalizedDiffuse, CoincidentAnchorInverseMode) {
    const std::vector<Vec3d> anchors{{0, 0, 0}, {1, 0, 0}};
    const SpectralStokes r = localizedDiffuse({0, 0, 0}, {grayStokes(2, 0, 0), grayStokes(5, 0, 0)}, anchors,
                                              AnchorWeighting::InverseDistance);
    EXPECT_TRUE(std::isfinite(r.s0.x));
    EXPECT_NEAR(r.s0.x, (2.0 / 1e-6 + 5.0) / (1.0 / 1e-6 + 1.0), 1e-12);
}

TEST(LocalizedDiffuse, ConvexHull) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-3.0, 3.0), pos(0.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 10;
        std::vector<Vec3d> anchors;
        std::vector<SpectralStokes> s;
        for (int i = 0; i < n; ++i) {
            anchors.push_back({u(rng), u(rng), u(rng)});
            s.push_back({{pos(rng), pos(rng), pos(rng)}, {u(rng), u(rng), u(rng)}, {u(rng), u(rng), u(rng)}, {}});
        }
        const Vec3d p{u(rng), u(rng), u(rng)};
        for (auto mode : {AnchorWeighting::Literal, AnchorWeighting::InverseDistance}) {
            const SpectralStokes r = localizedDiffuse(p, s, anchors, mode);
            for (int c = 0; c < 3; ++c) {
                auto check = [&](auto get) {
                    double lo = 1e300, hi = -1e300;
                    for (const auto& x : s) {
                        lo = std::min(lo, get(x)[static_cast<std::size_t>(c)]);
                        hi = std::max(hi, get(x)[static_cast<std::size_t>(c)]);
                    }
                    const double v = get(r)[static_cast<std::size_t>(c)];
                    EXPECT_GE(v, lo - 1e-12);
                    EXPECT_LE(v, hi + 1e-12);
                };
                check([](const SpectralStokes& x) { return x.s0; });
                check([](const SpectralStokes& x) { return x.s1; });
                check([](const SpectralStokes& x) { return x.s2; });
            }
        }
    }
}

TEST(Visibility, ConvexSphereReflectionsAreVisible) {
    const auto scene = sphereSurfels(500, 1.0, {0, 0, 0}, SurfelMaterial{});
    const SurfelTracer tracer(scene);
    const double eps = 1e-4 * sceneBounds(scene).diagonal();
    const auto cams = cameraRing(8, 4.0, 0.3, {0, 0, 0}, 8, 8, 0.7);
    // Flat discs stand proud of the ideal sphere: a neighbour's hit disc (radius
    // rHit) can rise up to about 2 rHit / R above the tangent plane, so rays
    // flatter than that may clip it.
    const SurfelGaussian& s0 = scene.front();
    const double rHit = s0.scaleU * std::sqrt(2.0 * std::log(2.0 * s0.opacity));
    const double minElevation = 2.0 * rHit / 1.0;
    int checked = 0;
    for (const auto& g : scene) {
        const Vec3d n = g.normal();
        EXPECT_TRUE(visibility(g.position, n, n, tracer, eps));
        for (const auto& cam : cams) {
            const Vec3d wo = normalize(cam.center() - g.position);
            if (dot(wo, n) <= 0.0 || dot(reflect(wo, n), n) < minElevation) continue;
            EXPECT_TRUE(visibility(g.position, n, reflect(wo, n), tracer, eps));
            ++checked;
        }
    }
    EXPECT_GT(checked, 1000);
}

TEST(Visibility, BowlBottomMatchesCapOracle) {
    const double radius = 1.0;
    const Vec3d center{0.0, 0.5, 0.0};
    const auto scene = bowlSurfels(1500, radius, center, SurfelMaterial{});
    const SurfelTracer tracer(scene);
    const double eps = 1e-4 * sceneBounds(scene).diagonal();
    const Vec3d p = center + Vec3d{0.0, -radius, 0.0};
    const Vec3d n{0.0, 1.0, 0.0};
    // Toward the opposite rim, just below it.
    EXPECT_FALSE(visibility(p, n, normalize(Vec3d{1.0, 0.9, 0.0}), tracer, eps));
    EXPECT_TRUE(visibility(p, n, n, tracer, eps));
    // A ray from a point on the sphere leaves it again at t = -2 (p - c).d;
    // it is blocked when that exit point lies on the cap (y below the rim).
    int checked = 0;
    for (int i = 0; i < 64; ++i)
        for (int j = 1; j < 16; ++j) {
            const double phi = 2.0 * kPi * i / 64, theta = 0.5 * kPi * j / 16;
            const Vec3d d{std::sin(theta) * std::cos(phi), std::cos(theta), std::sin(theta) * std::sin(phi)};
            const double t = -2.0 * dot(p - center, d);
            const double exitY = p.y + t * d.y - center.y;
            if (std::abs(exitY) < 0.1 * radius) continue;
            EXPECT_EQ(visibility(p, n, d, tracer, eps), exitY > 0.0) << "theta " << theta << " phi " << phi;
            ++checked;
        }
    EXPECT_GT(checked, 500);
}

TEST(AnchorGrid, RefreshCadence) {
    const auto scene = sphereSurfels(100, 0.5, {0, 0, 0}, SurfelMaterial{});
    const EnvCubeMipmap env = buildMipChain(16, randomEnvironment(16, 1));
    AnchorGrid grid;
    grid.resolution = 16;
    EXPECT_TRUE(refreshIfStale(grid, scene, env, 0));
    EXPECT_EQ(grid.anchors.size(), 52u);
    const auto* data = grid.localCubemaps.data();
    const auto first = grid.localCubemaps;
    for (long it = 1; it < 300; ++it) ASSERT_FALSE(refreshIfStale(grid, scene, env, it));
    EXPECT_EQ(grid.localCubemaps.data(), data);
    EXPECT_TRUE(refreshIfStale(grid, scene, env, 300));
    EXPECT_EQ(grid.lastBuild, 300);
    for (std::size_t i = 0; i < first.size(); ++i) {
        EXPECT_TRUE(first[i].levels == grid.localCubemaps[i].levels);
        EXPECT_TRUE(first[i].base() == grid.localCubemaps[i].base());
    }
    EXPECT_TRUE(refreshIfStale(grid, scene, env, 0));
    grid.refreshInterval = 5;
    EXPECT_FALSE(refreshIfStale(grid, scene, env, 4));
    EXPECT_TRUE(refreshIfStale(grid, scene, env, 5));
}

TEST(AnchorGrid, NoHitsReducesToGlobalIrradiance) {
    // Surfels below the hit threshold are invisible to the tracer, so every
    // local cubemap equals the global map.
    SurfelMaterial faint;
    faint.opacity = 0.3;
    const auto scene = sphereSurfels(50, 1.0, {0, 0, 0}, faint);
    const EnvCubeMipmap env = buildMipChain(16, randomEnvironment(16, 12));
    const AnchorGrid grid = buildAnchorGrid(scene, env, 16);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 50; ++k) {
        const Vec3d n = normalize(Vec3d{std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng),
                                        std::normal_distribution<double>()(rng)});
        const Rgb a = localizedIrradiance(grid, n * 1.0, n);
        const Rgb b = diffuseIrradiance(env, n);
        EXPECT_NEAR(a.x, b.x, 0.01 * b.x);
        EXPECT_NEAR(a.z, b.z, 0.01 * b.z);
    }
}

TEST(AnchorGrid, OccluderNeverBrightensShadowedPoint) {
    SurfelMaterial m;
    m.albedo = rgb(0.8);
    const EnvCubeMipmap env = buildMipChain(16, hemisphereEnvironment(16, rgb(2.0), rgb(0.1)));
    const auto floor = planeSurfels({-1, 0, 1}, {2, 0, 0}, {0, 0, -2}, 20, 20, m);
    auto blocked = floor;
    // Roof over the x < 0 half, facing down.
    const auto roof = planeSurfels({-1, 0.5, -1}, {1, 0, 0}, {0, 0, 2}, 10, 20, m);
    blocked.insert(blocked.end(), roof.begin(), roof.end());
    const AnchorGrid open = buildAnchorGrid(floor, env, 16);
    const AnchorGrid shut = buildAnchorGrid(blocked, env, 16);
    const Vec3d n{0, 1, 0};
    for (double x : {-0.8, -0.5, -0.2}) {
        const Vec3d p{x, 0.0, 0.0};
        const Rgb a = localizedIrradiance(open, p, n);
        const Rgb b = localizedIrradiance(shut, p, n);
        EXPECT_LE(b.x, a.x) << x;
    }
}
