#include "invctl/level_sets.hpp"
#include "invctl/plants.hpp"
#include "invctl/properties.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace invctl;

namespace {
Vector v3(double a, double b, double c) { return (Vector(3) << a, b, c).finished(); }

struct Fixture {
  NarxDataset data = build_dataset(collect_numerical_dataset(1), 2, 1);
  BoundSet bounds = BoundSet::explicit_form({6.5, 0.22, 1.0, 1}, 16.0);
};
}  // namespace

TEST(LevelSets, SlabInradius) {
  EXPECT_DOUBLE_EQ(*inradius_in_slab(v3(5, 0.25, 7), 2, 1.0), 0.75);
  EXPECT_FALSE(inradius_in_slab(v3(0, 1.0, 0), 2, 1.0).has_value());
  EXPECT_THROW(inradius_in_slab(v3(0, 0, 0), 2, 0.0), ConfigError);
}

TEST(LevelSets, UnionInradiusTakesBestSingleBall) {
  const std::vector<Ball> balls{{v3(0, 0, 0), 1.0}, {v3(0.5, 0, 0), 1.0}};
  EXPECT_DOUBLE_EQ(*inradius_in_union(v3(0.5, 0, 0), balls), 1.0);
  EXPECT_FALSE(inradius_in_union(v3(3, 0, 0), balls).has_value());
}

TEST(LevelSets, InradiusNeverOverestimates) {
  const auto r = check_inradius_underestimate(100, 5);
  EXPECT_TRUE(r.passed) << r.detail;
  EXPECT_EQ(r.checked, 100u);
}

TEST(LevelSets, GridIndexAgreesWithLinearScan) {
  const NoiseStream rng(9, 1);
  std::uint64_t c = 0;
  const int n = 600;
  PointMatrix centers(n, 3);
  Vector radii(n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) centers(i, k) = rng.uniform(c++, -2, 2);
    radii(i) = rng.uniform(c++, 0.01, 0.3);
  }
  const BallIndex indexed(centers, radii), linear(centers, radii, 1u << 30);
  ASSERT_TRUE(indexed.indexed());
  ASSERT_FALSE(linear.indexed());
  for (int s = 0; s < 3000; ++s) {
    const Vector p = v3(rng.uniform(c++, -2.2, 2.2), rng.uniform(c++, -2.2, 2.2), rng.uniform(c++, -2.2, 2.2));
    EXPECT_EQ(indexed.contains(p), linear.contains(p));
    const auto a = indexed.best_slack(p), b = linear.best_slack(p);
    if (b && b->second >= 0.0) {
      ASSERT_TRUE(a.has_value());
      EXPECT_EQ(a->first, b->first);
    }
  }
}

TEST(LevelSets, BestSlackTiesGoToLowestPosition) {
  PointMatrix centers(2, 3);
  centers << 1, 0, 0, -1, 0, 0;
  const BallIndex idx(centers, (Vector(2) << 2, 2).finished());
  EXPECT_EQ(idx.best_slack(v3(0, 0, 0))->first, 0);
}

TEST(LevelSets, FamilyIsSoundAndNested) {
  Fixture f;
  for (double delta : {0.1, 0.5, 2.0}) {
    const auto fam = build_level_family(f.data, f.bounds, delta, 20);
    EXPECT_FALSE(fam.level(0).empty());
    const auto r = check_level_soundness(f.data, f.bounds, fam, 50, 3);
    EXPECT_TRUE(r.passed) << r.detail;
    // level 0 radii respect the slab
    for (const auto& e : fam.level(0).entries)
      EXPECT_LE(e.r, delta - std::abs(f.data.successors()(static_cast<Eigen::Index>(e.index), 1)) + 1e-15);
    for (int j = 1; j <= 20; ++j)
      for (const auto& e : fam.level(j).entries) EXPECT_LE(f.bounds.gamma(e.cert), e.r);
  }
}

TEST(LevelSets, EmptyLevelZeroTruncates) {
  Fixture f;
  const auto fam = build_level_family(f.data, f.bounds, 1e-9, 5);
  ASSERT_TRUE(fam.truncated_at().has_value());
  EXPECT_EQ(*fam.truncated_at(), 0);
  EXPECT_EQ(fam.total_entries(), 0u);
}

TEST(LevelSets, CorruptedFamilyFailsSoundness) {
  Fixture f;
  const auto fam = build_level_family(f.data, f.bounds, 0.5, 5);
  std::stringstream s;
  write_family(s, fam);
  std::string text = s.str();
  // negate the first level-1 radius
  const auto pos = text.find("\n1,");
  ASSERT_NE(pos, std::string::npos);
  const auto comma = text.find(',', text.find(',', pos + 3) + 1);
  text.insert(comma + 1, "-");
  std::stringstream in(text);
  const auto bad = read_family(in, f.data);
  const auto r = check_level_soundness(f.data, f.bounds, bad, 10, 1);
  EXPECT_FALSE(r.passed);
  EXPECT_NE(r.detail.find("level 1"), std::string::npos);
}

TEST(LevelSets, FamilyDumpRoundTrip) {
  Fixture f;
  const auto fam = build_level_family(f.data, f.bounds, 0.3, 8);
  std::stringstream s;
  write_family(s, fam);
  const auto back = read_family(s, f.data);
  EXPECT_EQ(back.delta(), fam.delta());
  for (int j = 0; j <= 8; ++j) EXPECT_EQ(back.level(j).entries, fam.level(j).entries);
}
