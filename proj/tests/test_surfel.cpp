#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "polarsplat/surfel.hpp"

using namespace polarsplat;

namespace {

Camera downCamera(int w, int h) {
    // At (0, 0, 5) looking down -z.
    return Camera::lookAt({0.0, 0.0, 5.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, w, h, 0.8);
}

SurfelGaussian planeSurfel(const Vec3d& p, double scale) {
    SurfelGaussian g;
    g.position = p;
    g.scaleU = g.scaleV = scale;
    return g;
}

}  // namespace

TEST(RaySplat, AxisAlignedCenterPixel) {
    const Camera cam = downCamera(33, 33);
    const auto hit = raySplatIntersect(cam, 16, 16, planeSurfel({0, 0, 0}, 1.0));
    ASSERT_TRUE(hit);
    EXPECT_NEAR(hit->u, 0.0, 1e-12);
    EXPECT_NEAR(hit->v, 0.0, 1e-12);
    EXPECT_NEAR(hit->z, 5.0, 1e-12);
}

TEST(RaySplat, MatchesRayPlaneOracle) {
    std::mt19937_64 rng(11);
    const Camera cam = oracle::originCamera(32, 32);
    const auto scene = oracle::randomScene(rng, 40);
    int checked = 0;
    for (const auto& g : scene)
        for (int y = 0; y < 32; y += 3)
            for (int x = 0; x < 32; x += 3) {
                const auto a = raySplatIntersect(cam, x, y, g);
                const auto b = oracle::rayPlane(cam, x, y, g);
                ASSERT_EQ(a.has_value(), b.has_value());
                if (!a) continue;
                EXPECT_NEAR(a->u, b->u, 1e-9 * std::max(1.0, std::abs(b->u)));
                EXPECT_NEAR(a->v, b->v, 1e-9 * std::max(1.0, std::abs(b->v)));
                EXPECT_NEAR(a->z, b->z, 1e-9 * std::max(1.0, std::abs(b->z)));
                ++checked;
            }
    EXPECT_GT(checked, 1000);
}

TEST(RaySplat, ParallelAndDegenerate) {
    const Camera cam = downCamera(16, 16);
    const Camera straight = Camera::lookAt({0.0, 0.0, 5.0}, {0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, 1, 1, 0.8);
    SurfelGaussian side = planeSurfel({0.5, 0, 0}, 1.0);
    side.tangentU = {0.0, 1.0, 0.0};
    side.tangentV = {0.0, 0.0, 1.0};
    EXPECT_FALSE(raySplatIntersect(straight, 0, 0, side));
    SurfelGaussian flat = planeSurfel({0, 0, 0}, 1.0);
    flat.scaleU = 0.0;
    EXPECT_FALSE(raySplatIntersect(cam, 8, 8, flat));
    SurfelGaussian behind = planeSurfel({0, 0, 6}, 1.0);
    EXPECT_FALSE(raySplatIntersect(cam, 8, 8, behind));
}

TEST(RaySplat, ReprojectsOntoRay) {
    std::mt19937_64 rng(5);
    const Camera cam = oracle::originCamera(24, 24);
    for (const auto& g : oracle::randomScene(rng, 20)) {
        for (int y = 0; y < 24; y += 5)
            for (int x = 0; x < 24; x += 5) {
                const auto h = raySplatIntersect(cam, x, y, g);
                if (!h) continue;
                const Vec3d p = g.position + g.tangentU * (h->u * g.scaleU) + g.tangentV * (h->v * g.scaleV);
                const Vec3d onRay = cam.center() + cam.worldRay(x, y) * h->z;
                EXPECT_LT(length(p - onRay), 1e-6);
            }
    }
}

TEST(GaussianWeight, Values) {
    EXPECT_EQ(gaussianWeight(0.0, 0.0), 1.0);
    EXPECT_NEAR(gaussianWeight(1.0, 0.0), 0.6065306597126334, 1e-15);
    EXPECT_EQ(gaussianWeight(0.3, -1.7), gaussianWeight(-1.7, 0.3));
}

TEST(Rasterize, SingleOpaqueSurfel) {
    const Camera cam = downCamera(9, 9);
    SurfelGaussian g = planeSurfel({0, 0, 0}, 100.0);
    g.albedo = {0.2, 0.4, 0.6};
    g.roughness = 0.3;
    const GBuffer gb = rasterize({g}, cam);
    const std::size_t c = gb.index(4, 4);
    EXPECT_NEAR(gb.opacity[c], 1.0, 1e-12);
    EXPECT_NEAR(gb.meanAlbedo(c).y, 0.4, 1e-12);
    EXPECT_NEAR(gb.meanRoughness(c), 0.3, 1e-12);
    EXPECT_NEAR(gb.meanDepth(c), 5.0, 1e-12);
    EXPECT_NEAR(gb.normal[c].z, 1.0, 1e-12);
}

TEST(Rasterize, TwoStackedHalfAlpha) {
    const Camera cam = downCamera(9, 9);
    SurfelGaussian front = planeSurfel({0, 0, 1}, 1e6);
    SurfelGaussian back = planeSurfel({0, 0, 0}, 1e6);
    front.opacity = back.opacity = 0.5;
    front.albedo = rgb(1.0);
    back.albedo = rgb(0.2);
    const GBuffer gb = rasterize({back, front}, cam);
    const std::size_t c = gb.index(4, 4);
    EXPECT_NEAR(gb.opacity[c], 0.75, 1e-12);
    EXPECT_NEAR(gb.albedo[c].x, 0.5 * 1.0 + 0.25 * 0.2, 1e-12);
}

TEST(Rasterize, MatchesBruteForceOracle) {
    std::mt19937_64 rng(1234);
    for (int trial = 0; trial < 20; ++trial) {
        const auto scene = oracle::randomScene(rng, 1 + trial % 20);
        const Camera cam = oracle::originCamera(32, 32);
        EXPECT_TRUE(rasterize(scene, cam) == oracle::bruteForceBlend(scene, cam)) << "trial " << trial;
    }
}

TEST(Rasterize, PermutationInvariant) {
    std::mt19937_64 rng(99);
    const auto scene = oracle::randomScene(rng, 15);
    const Camera cam = oracle::originCamera(32, 32);
    auto shuffled = scene;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_TRUE(rasterize(scene, cam) == rasterize(shuffled, cam));
}

TEST(Rasterize, OpacityBoundedAndMonotone) {
    std::mt19937_64 rng(8);
    const auto scene = oracle::randomScene(rng, 20);
    const Camera cam = oracle::originCamera(24, 24);
    std::vector<SurfelGaussian> partial;
    GBuffer prev = rasterize(partial, cam);
    for (const auto& g : scene) {
        partial.push_back(g);
        const GBuffer gb = rasterize(partial, cam);
        for (std::size_t i = 0; i < gb.size(); ++i) {
            ASSERT_LE(gb.opacity[i], 1.0 + 1e-12);
            ASSERT_GE(gb.opacity[i], prev.opacity[i] - 1e-12);
            ASSERT_EQ(gb.opacity[i] == 0.0, length(gb.normal[i]) == 0.0);
        }
        prev = gb;
    }
}

TEST(Rasterize, EmptySceneIsZero) {
    const GBuffer gb = rasterize({}, downCamera(8, 8));
    for (std::size_t i = 0; i < gb.size(); ++i) {
        EXPECT_EQ(gb.opacity[i], 0.0);
        EXPECT_EQ(gb.depth[i], 0.0);
    }
}

TEST(DepthNormal, FrontoParallelPlane) {
    const Camera cam = downCamera(16, 16);
    const GBuffer gb = rasterize({planeSurfel({0, 0, 0}, 1e3)}, cam);
    const Image<Vec3d> n = depthToNormal(gb, cam);
    for (int y = 1; y < 15; ++y)
        for (int x = 1; x < 15; ++x) {
            EXPECT_NEAR(n.at(x, y).z, 1.0, 1e-9);
            EXPECT_NEAR(n.at(x, y).x, 0.0, 1e-9);
        }
}

TEST(DepthNormal, TiltedPlane) {
    const Camera cam = downCamera(24, 24);
    SurfelGaussian g = planeSurfel({0, 0, 0}, 1e3);
    const double a = 0.5;
    g.tangentU = {std::cos(a), 0.0, std::sin(a)};
    const Vec3d expected = g.normal();
    const GBuffer gb = rasterize({g}, cam);
    const Image<Vec3d> n = depthToNormal(gb, cam);
    for (int y = 2; y < 22; ++y)
        for (int x = 2; x < 22; ++x) EXPECT_LT(length(n.at(x, y) - expected), 1e-3);
}

TEST(DepthNormal, IsolatedPixelIsZero) {
    GBuffer gb(5, 5);
    gb.opacity[gb.index(2, 2)] = 1.0;
    gb.depth[gb.index(2, 2)] = 3.0;
    const Image<Vec3d> n = depthToNormal(gb, downCamera(5, 5));
    EXPECT_EQ(length(n.at(2, 2)), 0.0);
}
