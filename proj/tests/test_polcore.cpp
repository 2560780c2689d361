#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "polarsplat/polcore.hpp"

using namespace polarsplat;

namespace {

// Fresnel power coefficients from the angle form of the Fresnel equations.
struct AngleFresnel {
    double rPerp, rPar, tPerp, tPar, cos2;
};

AngleFresnel angleFresnel(double eta, double theta1) {
    const double theta2 = std::asin(std::sin(theta1) / eta);
    AngleFresnel f{};
    f.cos2 = std::cos(theta2);
    if (theta1 == 0.0) {
        const double r = (1.0 - eta) / (1.0 + eta);
        const double t = 2.0 / (1.0 + eta);
        return {r * r, r * r, t * t, t * t, 1.0};
    }
    const double rs = -std::sin(theta1 - theta2) / std::sin(theta1 + theta2);
    const double rp = std::tan(theta1 - theta2) / std::tan(theta1 + theta2);
    const double ts = 2.0 * std::sin(theta2) * std::cos(theta1) / std::sin(theta1 + theta2);
    const double tp = ts / std::cos(theta1 - theta2);
    f.rPerp = rs * rs;
    f.rPar = rp * rp;
    f.tPerp = ts * ts;
    f.tPar = tp * tp;
    return f;
}

double deg(double d) { return d * kPi / 180.0; }

SpectralStokes gray(double s0, double s1, double s2) { return {rgb(s0), rgb(s1), rgb(s2), rgb(0.0)}; }

}  // namespace

TEST(Fresnel, NormalIncidenceGlass) {
    const auto f = fresnel(1.5, 1.0);
    EXPECT_NEAR(f.rPerp, 0.04, 1e-12);
    EXPECT_NEAR(f.rPar, 0.04, 1e-12);
    EXPECT_NEAR(f.tPerp, 0.64, 1e-12);
    EXPECT_NEAR(f.tPar, 0.64, 1e-12);
    EXPECT_NEAR(1.5 * 0.64 + 0.04, 1.0, 1e-12);
    EXPECT_NEAR(1.5 * f.cosTheta2 / f.cosTheta1 * f.tPerp + f.rPerp, 1.0, 1e-12);
}

TEST(Fresnel, MatchesAngleForm) {
    for (double eta : {1.3, 1.5, 1.8, 2.3})
        for (double t : {0.0, 10.0, 33.0, 56.0, 75.0, 89.0}) {
            const AngleFresnel o = angleFresnel(eta, deg(t));
            const auto f = fresnel(eta, std::cos(deg(t)));
            EXPECT_NEAR(f.rPerp, o.rPerp, 1e-12) << eta << " " << t;
            EXPECT_NEAR(f.rPar, o.rPar, 1e-12) << eta << " " << t;
            EXPECT_NEAR(f.tPerp, o.tPerp, 1e-12) << eta << " " << t;
            EXPECT_NEAR(f.tPar, o.tPar, 1e-12) << eta << " " << t;
            EXPECT_NEAR(f.cosTheta2, o.cos2, 1e-12);
        }
}

TEST(Fresnel, GrazingLimit) {
    const auto f = fresnel(1.5, 1e-7);
    EXPECT_NEAR(f.rPerp, 1.0, 1e-5);
    EXPECT_NEAR(f.rPar, 1.0, 1e-5);
    EXPECT_NEAR(f.tPerp, 0.0, 1e-5);
    EXPECT_NEAR(f.tPar, 0.0, 1e-5);
}

TEST(Fresnel, BrewsterAngle) {
    const double thetaB = std::atan(1.5);
    const auto f = fresnel(1.5, std::cos(thetaB));
    EXPECT_NEAR(f.rPar, 0.0, 1e-15);
    EXPECT_NEAR(betaSpec(f), 1.0, 1e-12);
}

TEST(Fresnel, RejectsBackFacing) {
    EXPECT_THROW(fresnel(1.5, 0.0), std::domain_error);
    EXPECT_THROW(fresnel(1.5, -0.2), std::domain_error);
    EXPECT_THROW(fresnel(0.9, 0.5), std::domain_error);
}

TEST(Fresnel, RandomEnergyIdentityAndOrdering) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> etaDist(1.3, 2.3), thetaDist(0.0, deg(89.9));
    for (int i = 0; i < 10000; ++i) {
        const double eta = etaDist(rng);
        const double c1 = std::cos(thetaDist(rng));
        const auto f = fresnel(eta, c1);
        const double k = eta * f.cosTheta2 / f.cosTheta1;
        ASSERT_NEAR(k * f.tPerp + f.rPerp, 1.0, 1e-9);
        ASSERT_NEAR(k * f.tPar + f.rPar, 1.0, 1e-9);
        ASSERT_GE(f.rPerp, f.rPar - 1e-15);
        ASSERT_GE(f.tPar, f.tPerp - 1e-15);
        ASSERT_LE(f.rPerp, 1.0);
        ASSERT_GE(betaSpec(f), 0.0);
        ASSERT_LE(betaSpec(f), 1.0 + 1e-12);
        ASSERT_LE(betaDiff(f), 0.0);
        ASSERT_GE(betaDiff(f), -1.0);
    }
}

TEST(Beta, NormalIncidenceIsZero) {
    const auto f = fresnel(1.5, 1.0);
    EXPECT_EQ(betaSpec(f), 0.0);
    EXPECT_EQ(betaDiff(f), 0.0);
}

TEST(Beta, SixtyDegreesDiffuseWeaker) {
    const auto f = fresnel(1.5, std::cos(deg(60.0)));
    EXPECT_LT(betaDiff(f), 0.0);
    EXPECT_LT(std::abs(betaDiff(f)), betaSpec(f));
}

TEST(Beta, GrazingLimits) {
    const double eta = 1.5;
    const auto f = fresnel(eta, 1e-9);
    EXPECT_NEAR(betaSpec(f), 0.0, 1e-6);
    // Transmission ratio at grazing incidence: (c2 + eta c1)^2 / (c1 + eta c2)^2
    // with c1 -> 0 gives T_perp / T_par -> 1 / eta^2.
    EXPECT_NEAR(betaDiff(f), (1.0 - eta * eta) / (1.0 + eta * eta), 1e-6);
}

TEST(Beta, ZeroEnergyConvention) {
    FresnelSet<double> f;
    EXPECT_EQ(betaSpec(f), 0.0);
    EXPECT_EQ(betaDiff(f), 0.0);
}

TEST(Mueller, PolarizerAtZero) {
    const MuellerMatrix m = muellerLP(0.0);
    const double expected[4][4] = {{0.5, 0.5, 0, 0}, {0.5, 0.5, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}};
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(m(r, c), expected[r][c], 1e-15);
    const auto v = m.apply({1, 0, 0, 0});
    EXPECT_DOUBLE_EQ(v[0], 0.5);
    EXPECT_DOUBLE_EQ(v[1], 0.5);
}

TEST(Mueller, PolarizerIdempotentAndCrossed) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> a(-kPi, kPi), u(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double t = a(rng);
        const MuellerMatrix m = muellerLP(t);
        const MuellerMatrix mm = m * m;
        const MuellerMatrix crossed = muellerLP(t + kPi / 2) * m;
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) {
                ASSERT_NEAR(mm(r, c), m(r, c), 1e-12);
                ASSERT_NEAR(crossed(r, c), 0.0, 1e-12);
            }
        const double s1 = u(rng), s2 = u(rng);
        const double s0 = std::hypot(s1, s2) + 0.1;
        const auto out = (muellerLP(kPi / 2) * muellerLP(0.0)).apply({s0, s1, s2, 0});
        ASSERT_NEAR(out[0], 0.0, 1e-12);
    }
}

TEST(Mueller, RotationProperties) {
    const MuellerMatrix id = muellerRotation(0.0);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) EXPECT_EQ(id(r, c), r == c ? 1.0 : 0.0);
    const auto v = muellerRotation(kPi / 4).apply({1, 1, 0, 0});
    EXPECT_NEAR(v[0], 1.0, 1e-15);
    EXPECT_NEAR(v[1], 0.0, 1e-15);
    EXPECT_NEAR(v[2], -1.0, 1e-15);
    const MuellerMatrix p = muellerRotation(0.37) * muellerRotation(-0.37);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) EXPECT_NEAR(p(r, c), r == c ? 1.0 : 0.0, 1e-15);
}

TEST(Mueller, PolarizerIsRotatedReference) {
    for (double t : {0.1, 0.7, -1.2, 2.9}) {
        const MuellerMatrix a = muellerLP(t);
        const MuellerMatrix b = muellerRotation(-t) * muellerLP(0.0) * muellerRotation(t);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c) EXPECT_NEAR(a(r, c), b(r, c), 1e-14);
    }
}

TEST(Mueller, ApplyIdentityAndMalus) {
    const SpectralStokes s{{1.0, 2.0, 3.0}, {0.5, -0.2, 1.0}, {0.1, 0.3, -2.0}, {}};
    EXPECT_EQ(applyMueller(MuellerMatrix::identity(), s), s);
    const SpectralStokes once = applyMueller(muellerLP(0.0), gray(1, 0, 0));
    const SpectralStokes twice = applyMueller(muellerLP(0.0), once);
    EXPECT_EQ(once, twice);
    for (double t : {0.0, 0.3, 0.9, 1.4}) {
        const SpectralStokes out = applyMueller(muellerLP(t), once);
        EXPECT_NEAR(out.s0.x / once.s0.x, std::cos(t) * std::cos(t), 1e-12);
    }
}

TEST(DopAop, Examples) {
    EXPECT_EQ(dopAop(gray(1, 0, 0)).dop.x, 0.0);
    const DopAop a = dopAop(gray(1, 1, 0));
    EXPECT_DOUBLE_EQ(a.dop.y, 1.0);
    EXPECT_DOUBLE_EQ(a.aop.y, 0.0);
    const DopAop b = dopAop(gray(2, 0, -2));
    EXPECT_DOUBLE_EQ(b.dop.z, 1.0);
    EXPECT_NEAR(b.aop.z, -kPi / 4, 1e-15);
    const DopAop z = dopAop(gray(0, 0, 0));
    EXPECT_EQ(z.dop.x, 0.0);
    EXPECT_EQ(z.aop.x, 0.0);
}

TEST(Stokes, PhysicalCheck) {
    EXPECT_TRUE(isPhysical(gray(1, 0.6, 0.8)));
    EXPECT_FALSE(isPhysical(gray(1, 0.8, 0.8)));
    EXPECT_FALSE(isPhysical(gray(-0.1, 0, 0)));
}
