#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "gradcheck.hpp"
#include "polarsplat/gridmap.hpp"
#include "polarsplat/params.hpp"

using namespace polarsplat;
using namespace polarsplat::testing;

namespace {

const SplitSumLUT& lut() {
    static const SplitSumLUT table = precomputeLUT(1024, 16, 16);
    return table;
}

std::string describe(const FdReport& r) {
    std::string s;
    for (std::size_t i = 0; i < std::min<std::size_t>(r.mismatches.size(), 10); ++i)
        s += r.mismatches[i].what + ": analytic " + std::to_string(r.mismatches[i].analytic) + " numeric " +
             std::to_string(r.mismatches[i].numeric) + "\n";
    return s;
}

SceneParameters startParams() { return SceneParameters::fromScene(threeSurfelScene(), randomEnvironment(8, 3)); }

}  // namespace

TEST(Params, LatentRoundTrip) {
    for (const SurfelGaussian& g : threeSurfelScene()) {
        const SurfelGaussian back = surfelFromLatents(g, surfelLatents(g));
        EXPECT_NEAR(length(back.position - g.position), 0.0, 1e-15);
        EXPECT_NEAR(length(back.tangentU - g.tangentU), 0.0, 1e-15);
        EXPECT_NEAR(back.scaleU, g.scaleU, 1e-15);
        EXPECT_NEAR(back.opacity, g.opacity, 1e-12);
        EXPECT_NEAR(length(back.albedo - g.albedo), 0.0, 1e-12);
        EXPECT_NEAR(back.roughness, g.roughness, 1e-12);
        EXPECT_EQ(back.iorLatent, g.iorLatent);
    }
}

TEST(Params, TiltKeepsTangentsOrthonormal) {
    SceneParameters p = startParams();
    p.surfels[0][kTiltU] = 0.3;
    p.surfels[0][kTiltV] = -0.7;
    const SurfelGaussian tilted = p.scene()[0];
    EXPECT_NEAR(dot(tilted.tangentU, tilted.tangentV), 0.0, 1e-14);
    EXPECT_NEAR(length(tilted.tangentU), 1.0, 1e-14);
    p.bakeTilts();
    const SurfelGaussian baked = p.scene()[0];
    EXPECT_EQ(p.surfels[0][kTiltU], 0.0);
    EXPECT_NEAR(length(baked.tangentU - tilted.tangentU), 0.0, 1e-14);
    EXPECT_NEAR(length(baked.tangentV - tilted.tangentV), 0.0, 1e-14);
}

TEST(Gradient, MatchesFiniteDifferencesFullStokes) {
    const FdReport r = finiteDifferenceCheck(startParams(), {threeSurfelObservation(lut())}, 8, lut(), nullptr, {});
    for (ParamGroup g : {ParamGroup::Position, ParamGroup::Rotation, ParamGroup::Scale, ParamGroup::Opacity,
                         ParamGroup::Albedo, ParamGroup::Roughness, ParamGroup::Ior, ParamGroup::Environment})
        EXPECT_GT(r.checkedPerGroup[static_cast<std::size_t>(g)], 0u) << groupName(g);
    EXPECT_TRUE(r.mismatches.empty()) << r.mismatches.size() << " of " << r.checked << "\n" << describe(r);
}

TEST(Gradient, MatchesFiniteDifferencesPartialLP) {
    SceneParameters p = startParams();
    p.lpAngles = {0.2, 1.3};
    LossSetup setup;
    setup.mode = PolarizationMode::PartialLP;
    // Captures shifted below any rendered intensity keep every capture
    // residual away from the L1 kink.
    const Observation obs = toPartial(threeSurfelObservation(lut()), 0.0, kPi / 2, -1.0);
    const FdReport r = finiteDifferenceCheck(p, {obs}, 8, lut(), nullptr, setup);
    EXPECT_EQ(r.checkedPerGroup[static_cast<std::size_t>(ParamGroup::LPAngles)], 2u);
    EXPECT_TRUE(r.mismatches.empty()) << r.mismatches.size() << " of " << r.checked << "\n" << describe(r);
}

TEST(Gradient, MatchesFiniteDifferencesWithFixedGridMap) {
    const SceneParameters p = startParams();
    const EnvCubeMipmap env = buildMipChain(8, p.envLatents);
    AnchorGrid grid;
    grid.resolution = 8;
    refreshIfStale(grid, p.scene(), env, 0);
    ASSERT_TRUE(grid.built());
    const FdReport r = finiteDifferenceCheck(p, {threeSurfelObservation(lut())}, 8, lut(), &grid, {});
    EXPECT_TRUE(r.mismatches.empty()) << r.mismatches.size() << " of " << r.checked << "\n" << describe(r);
}

TEST(Gradient, ZeroAtExactReconstruction) {
    SurfelMaterial m;
    m.albedo = {0.5, 0.4, 0.3};
    m.roughness = 0.4;
    m.opacity = 0.95;
    const auto scene = planeSurfels({-1.5, -1.5, 0}, {3, 0, 0}, {0, 3, 0}, 8, 8, m);
    const Camera cam = Camera::lookAt({0, 0, 2}, {0, 0, 0}, {0, 1, 0}, 12, 12, 0.5);
    const EnvCubeMipmap env = buildMipChain(8, randomEnvironment(8, 9));
    const RenderOutputs o = renderOutputs(renderPolar(scene, cam, env, &lut()), cam);
    Observation obs;
    obs.camera = cam;
    obs.s0 = o.s0;
    obs.s1 = o.s1;
    obs.s2 = o.s2;
    obs.mask = o.opacity;
    SceneGradient g;
    const LossBreakdown b = sceneLoss(scene, {obs}, env, lut(), nullptr, {}, &g);
    EXPECT_NEAR(b.total, 0.0, 1e-9);
    EXPECT_LE(g.norm(), 1e-6);
}

// A near-black mirror plane seen head-on reflects only directions around +z,
// so only texels near the +z face centre can influence the loss.
TEST(Gradient, EnvironmentLocality) {
    SurfelMaterial m;
    m.albedo = rgb(0.0);
    m.roughness = kRoughnessMin;
    m.opacity = 0.99;
    const auto scene = planeSurfels({-0.3, -0.3, 0}, {0.6, 0, 0}, {0, 0.6, 0}, 6, 6, m);
    const Camera cam = Camera::lookAt({0, 0, 4}, {0, 0, 0}, {0, 1, 0}, 8, 8, 0.08);
    const int res = 8;
    const auto latents = randomEnvironment(res, 5);
    const CubeLayout layout(res);
    const EnvCubeMipmap env = buildMipChain(res, latents);
    Observation obs;
    obs.camera = cam;
    obs.s0 = Image<Rgb>(8, 8);
    obs.s1 = Image<Rgb>(8, 8);
    obs.s2 = Image<Rgb>(8, 8);
    LossSetup setup;
    setup.weights = {0.0, 0.0, 0.0, 0.0};
    auto eval = [&](const std::vector<Rgb>& l) {
        EnvCubeMipmap e = env;
        e.setLatents(l);
        return sceneLoss(scene, {obs}, e, lut(), nullptr, setup).total;
    };
    SceneGradient g;
    sceneLoss(scene, {obs}, env, lut(), nullptr, setup, &g);

    std::size_t nearCount = 0, farCount = 0;
    double nearMax = 0.0;
    for (std::size_t t = 0; t < latents.size(); ++t) {
        const Vec3d dir = layout.direction(t);
        auto a = latents, b = latents;
        a[t].y += 1e-4;
        b[t].y -= 1e-4;
        const double slope = (eval(a) - eval(b)) / 2e-4;
        if (dir.z < 0.5) {
            ++farCount;
            EXPECT_LE(std::abs(slope), 1e-9) << "texel " << t;
            EXPECT_LE(std::abs(g.env[t].y), 1e-9) << "texel " << t;
        } else if (dir.z > 0.95) {
            ++nearCount;
            nearMax = std::max(nearMax, std::abs(slope));
        }
    }
    EXPECT_GT(farCount, 0u);
    EXPECT_GT(nearCount, 0u);
    EXPECT_GT(nearMax, 1e-3);
}

TEST(Gradient, NonFiniteLossNamesPixel) {
    SceneParameters p = startParams();
    p.envLatents[0] = rgb(std::numeric_limits<double>::quiet_NaN());
    const Observation obs = threeSurfelObservation(lut());
    const EnvCubeMipmap env = buildMipChain(8, p.envLatents);
    try {
        sceneLoss(p.scene(), {obs}, env, lut(), nullptr, {});
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("pixel"), std::string::npos) << e.what();
    }
}

TEST(Gradient, NonFiniteGradientNamesParameter) {
    SceneGradient g;
    g.resizeLike(startParams());
    g.surfels[1][kIorLatent] = std::numeric_limits<double>::infinity();
    try {
        detail::checkGradientFinite(g);
        FAIL() << "expected NumericError";
    } catch (const NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("surfel 1 parameter ior"), std::string::npos) << e.what();
    }
}

TEST(Gradient, ViewOrderDoesNotMatter) {
    const SceneParameters p = startParams();
    Observation a = threeSurfelObservation(lut());
    Observation b = a;
    b.camera = Camera::lookAt({-0.4, 0.1, 3.0}, {0, 0, 0}, {0, 1, 0}, 16, 16, 0.7);
    const EnvCubeMipmap env = buildMipChain(8, p.envLatents);
    SceneGradient g1, g2;
    const double l1 = sceneLoss(p.scene(), {a, b}, env, lut(), nullptr, {}, &g1).total;
    const double l2 = sceneLoss(p.scene(), {b, a}, env, lut(), nullptr, {}, &g2).total;
    EXPECT_NEAR(l1, l2, 1e-14);
    for (std::size_t s = 0; s < g1.surfels.size(); ++s)
        for (std::size_t k = 0; k < kSurfelParams; ++k) EXPECT_NEAR(g1.surfels[s][k], g2.surfels[s][k], 1e-12);
}
