#include <gtest/gtest.h>

#include "polarsplat/activations.hpp"
#include "polarsplat/cubemap.hpp"
#include "polarsplat/dual.hpp"
#include "polarsplat/envlight.hpp"
#include "polarsplat/math.hpp"
#include "polarsplat/parallel.hpp"
#include "polarsplat/polcore.hpp"
#include "polarsplat/raycast.hpp"
#include "polarsplat/sampling.hpp"
#include "polarsplat/surfel.hpp"

using namespace polarsplat;

TEST(Headers, DualInstantiation) {
    using D = Dual<3>;
    Vec3<D> n{D::variable(0.1, 0), D::variable(0.2, 1), D::variable(0.9, 2)};
    n = normalize(n);
    auto f = fresnel(D(1.5), n.z);
    EXPECT_GT(value(betaSpec(f)), 0.0);
    EXPECT_LT(value(betaDiff(f)), 0.0);
    EXPECT_GT(value(iorActivation(D::variable(0.3, 0))), 1.3);
    EXPECT_GT(value(roughnessActivation(D(0.0))), 0.08);
}
