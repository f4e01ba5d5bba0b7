#include "invctl/bounds.hpp"
#include "invctl/properties.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace invctl;

namespace {
BoundSet numerical_bounds() { return BoundSet::explicit_form({6.5, 0.22, 1.0, 1}, 16.0); }
}  // namespace

TEST(Bounds, ExplicitEtaValues) {
  const auto b = numerical_bounds();
  EXPECT_EQ(b.eta(0.0), 0.0);
  EXPECT_NEAR(b.eta(4.0), std::sqrt(1.0 - std::exp(-1.0)), 1e-15);
  EXPECT_NEAR(b.eta(4.0), 0.79506, 1e-5);
  EXPECT_NEAR(b.eta(1e3), 1.0, 1e-15);
  // tiny arguments stay accurate through expm1
  EXPECT_NEAR(b.eta(1e-10), 1e-10 / 4.0, 1e-22);
}

TEST(Bounds, ComposedFunctions) {
  const auto b = numerical_bounds();
  const double gu = 0.22 + std::sqrt(1.0 - std::exp(-1.0 / 16.0));
  EXPECT_NEAR(b.gamma_u(1.0), gu, 1e-15);
  EXPECT_NEAR(b.gamma_u(1.0), 0.4662, 1e-3);
  EXPECT_NEAR(b.gamma_y(1.0), 6.5 * (1.0 + gu), 1e-13);
  EXPECT_NEAR(b.gamma(1.0), gu + 6.5 * (1.0 + gu) + 1.0, 1e-13);
  for (double e : {0.01, 0.3, 2.0}) EXPECT_GE(b.gamma_y(e), 6.5 * e);
  EXPECT_GT(b.gamma_u(2.0), b.gamma_u(1.0));
}

TEST(Bounds, DelayTwoAndLinearOverride) {
  auto b = BoundSet::explicit_form({2.0, 3.0, 1.0, 2}, 16.0);
  EXPECT_THROW(b.gamma_y(1.0), ConfigError);
  EXPECT_NEAR(b.gamma(0.5), b.gamma_u(0.5) + 3.0 * 0.5, 1e-15);
  b.with_linear_gamma(1.005);
  EXPECT_DOUBLE_EQ(b.gamma(2.0), 2.01);
  EXPECT_DOUBLE_EQ(b.gamma_inverse(2.01), 2.01 / 1.005);
}

TEST(Bounds, ProfileModeMatchesExplicitForMatchingKernel) {
  // SE with 2 l^2 = 16 gives the same complement as the explicit form
  const IsotropicKernel k(KernelFamily::squared_exponential, 1.0, 2.0 * std::sqrt(2.0));
  const auto p = BoundSet::from_kernel({6.5, 0.22, 1.0, 1}, k);
  const auto e = numerical_bounds();
  for (double x : {0.0, 0.1, 1.0, 4.0, 10.0}) EXPECT_NEAR(p.eta(x), e.eta(x), 1e-15);
}

TEST(Bounds, NegativeArgumentsRejected) {
  const auto b = numerical_bounds();
  EXPECT_THROW(b.eta(-1.0), ConfigError);
  EXPECT_THROW(b.gamma(-1e-300), ConfigError);
  EXPECT_THROW(b.gamma_inverse(-1.0), ConfigError);
  EXPECT_THROW(BoundSet::explicit_form({0.0, 1.0, 1.0, 1}, 16.0), ConfigError);
}

TEST(Bounds, InverseAndClassKProperties) {
  for (const auto& b : {numerical_bounds(), BoundSet::explicit_form({2.2, 3e5, 40.0, 2}, 3.0)}) {
    EXPECT_TRUE(check_gamma_inversion(b, "t").passed) << check_gamma_inversion(b, "t").detail;
    EXPECT_TRUE(check_class_k(b, "t").passed) << check_class_k(b, "t").detail;
    // gamma^{-1} is the largest argument with gamma <= r
    for (double r : {1e-4, 0.3, 7.0}) {
      const double e = b.gamma_inverse(r);
      EXPECT_LE(b.gamma(e), r);
      EXPECT_GT(b.gamma(std::nextafter(e, 1e300) * (1 + 1e-12)), r);
    }
  }
}

TEST(Bounds, ProfileEtaSaturatesWithoutBreakingClassK) {
  const ArdMatern52Kernel k(5.0, {0.057, 0.058, 0.058, 0.97});
  const auto b = BoundSet::from_kernel({2.2, 3.3e5, 6.5, 2}, k);
  const auto r = check_class_k(b, "ard");
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_NEAR(b.eta(100.0), 6.5, 1e-12);
}
