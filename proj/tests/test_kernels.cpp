#include "invctl/kernels.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace invctl;

namespace {
Vector v(std::initializer_list<double> xs) {
  Vector out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) out(i++) = x;
  return out;
}
}  // namespace

TEST(Kernels, SquaredExponentialAtDistanceFour) {
  const IsotropicKernel k(KernelFamily::squared_exponential, 1.0, 2.0 * std::sqrt(2.0));
  EXPECT_NEAR(k(v({0, 0}), v({4, 0})), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(k.profile(4.0), std::exp(-1.0), 1e-15);
}

TEST(Kernels, LaplacianAndMatern) {
  const IsotropicKernel lap(KernelFamily::laplacian, 2.0, 1.0);
  EXPECT_NEAR(lap(v({0}), v({2})), 4.0 * std::exp(-2.0), 1e-14);
  // s = r / (sqrt(2) l) = 1
  const IsotropicKernel mat(KernelFamily::matern52, 1.0, 1.0 / std::sqrt(2.0));
  EXPECT_NEAR(mat(v({0, 0, 0}), v({1, 0, 0})), 0.5239941088318203, 1e-14);
}

TEST(Kernels, ComplementMatchesProfileAndIsAccurateNearZero) {
  for (auto fam : {KernelFamily::squared_exponential, KernelFamily::laplacian, KernelFamily::matern52}) {
    const IsotropicKernel k(fam, 1.5, 0.7);
    for (double r : {0.0, 1e-3, 0.1, 1.0, 5.0}) {
      EXPECT_NEAR(k.signal_variance() * (1.0 - k.profile_complement(r)), k(v({0.0}), v({r})), 1e-13);
    }
    EXPECT_EQ(k.profile_complement(0.0), 0.0);
    EXPECT_GT(k.profile_complement(1e-7), 0.0);
  }
  // series branch agrees with the direct form at the switch point
  EXPECT_NEAR(detail::matern52_shape_complement(0.00999999), 1.0 - detail::matern52_shape(0.00999999), 1e-12);
}

TEST(Kernels, SymmetricAndBoundedByVariance) {
  const ArdMatern52Kernel k(5.0, {0.3, 1.0, 2.0, 0.5});
  const Vector a = v({0.1, -0.2, 0.3, 1.0}), b = v({-0.4, 0.2, 0.0, 2.0});
  EXPECT_DOUBLE_EQ(k(a, b), k(b, a));
  EXPECT_DOUBLE_EQ(k(a, a), 25.0);
  EXPECT_LT(k(a, b), 25.0);
}

TEST(Kernels, ArdEnvelopeDominatesEveryDirection) {
  const ArdMatern52Kernel k(1.0, {0.3, 1.0, 2.0});
  for (int axis = 0; axis < 3; ++axis)
    for (double eps : {0.01, 0.1, 0.5, 2.0}) {
      Vector d = Vector::Zero(3);
      d(axis) = eps;
      EXPECT_GE(k.profile_complement(eps) + 1e-15, 1.0 - k(Vector::Zero(3), d));
    }
}

TEST(Kernels, RejectsBadHyperparameters) {
  EXPECT_THROW(IsotropicKernel(KernelFamily::laplacian, 0.0, 1.0), ConfigError);
  EXPECT_THROW(IsotropicKernel(KernelFamily::laplacian, 1.0, -1.0), ConfigError);
  EXPECT_THROW(ArdMatern52Kernel(1.0, {}), ConfigError);
  EXPECT_THROW(kernel_family_from_string("rbf2"), ConfigError);
  const ArdMatern52Kernel k(1.0, {1.0, 1.0});
  EXPECT_THROW(k(v({1, 2, 3}), v({1, 2, 3})), DimensionError);
}

TEST(Kernels, GramIsSymmetricWithVarianceDiagonal) {
  PointMatrix X(3, 2);
  X << 0, 0, 1, 0, 0, 2;
  const AnyKernel k = IsotropicKernel(KernelFamily::squared_exponential, 2.0, 1.0);
  const Matrix G = gram(k, X);
  EXPECT_TRUE(G.isApprox(G.transpose()));
  EXPECT_DOUBLE_EQ(G(1, 1), 4.0);
  EXPECT_NEAR(G(0, 1), 4.0 * std::exp(-0.5), 1e-15);
  const Vector kv = kernel_vector(k, X, v({1, 0}));
  EXPECT_DOUBLE_EQ(kv(1), 4.0);
  EXPECT_EQ(k.family_name(), "squared_exponential");
}
