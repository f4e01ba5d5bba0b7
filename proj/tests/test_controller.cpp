#include "invctl/controller.hpp"
#include "invctl/harness.hpp"

#include <gtest/gtest.h>

using namespace invctl;

namespace {
struct Setup {
  RunConfig cfg = default_config("numerical");
  std::shared_ptr<const NarxDataset> data =
      std::make_shared<const NarxDataset>(dataset_from(cfg, collect(cfg)));
  FittedModel fit = fit_model(cfg, *data);
  BoundSet bounds = make_bounds(cfg, fit.model->kernel(), fit.Gamma);
  std::vector<LevelFamily> families = build_families(cfg, *data, bounds);
  Controller<AnyKernel> ctl{data, fit.model, families};
};

const Setup& setup() {
  static const Setup s;
  return s;
}
}  // namespace

TEST(Controller, LocatesSmallestDeltaThenSmallestLevel) {
  const auto& s = setup();
  const auto& Z = s.data->zeta();
  for (Eigen::Index i = 0; i < Z.rows(); i += 37) {
    const Vector z = Z.row(i).transpose();
    const auto loc = s.ctl.locate(z, 1);
    if (!loc) continue;
    for (std::size_t k = 0; k < loc->family; ++k)
      for (int j = 1; j <= s.cfg.kappa_bar; ++j) EXPECT_FALSE(contains(s.families[k], j, z));
    for (int j = 1; j < loc->kappa; ++j) EXPECT_FALSE(contains(s.families[loc->family], j, z));
    EXPECT_TRUE(contains(s.families[loc->family], loc->kappa, z));
  }
}

TEST(Controller, CertifiedReferenceCoversState) {
  const auto& s = setup();
  const Vector z = Vector::Zero(3);
  const auto act = s.ctl.control(z);
  ASSERT_TRUE(act.certificate.certified);
  const auto& level = s.families[*act.certificate.family].level(act.certificate.kappa);
  bool found = false;
  for (const auto& e : level.entries)
    if (e.index == act.certificate.i1) {
      found = true;
      EXPECT_NEAR(act.certificate.slack, e.cert - (s.data->zeta().row(static_cast<Eigen::Index>(e.index)).transpose() - z).norm(), 1e-12);
      EXPECT_GE(act.certificate.slack, 0.0);
    }
  EXPECT_TRUE(found);
  EXPECT_EQ(act.reference, (*s.data)[act.certificate.i1].target);
}

TEST(Controller, FallbackUsesNearestRecordUncertified) {
  const auto& s = setup();
  const Vector far = (Vector(3) << 50, 50, 50).finished();
  const auto act = s.ctl.control(far);
  EXPECT_FALSE(act.certificate.certified);
  EXPECT_EQ(act.certificate.i1, s.ctl.nearest_record(far));
  EXPECT_EQ(s.ctl.assert_descent(act.certificate, far), Descent::skipped);
}

TEST(Controller, ClosedLoopDescentHolds) {
  const auto& s = setup();
  const NumericalPlant plant;
  for (const auto& z0 : s.cfg.initial_states) {
    const auto log = simulate_run(plant, s.ctl, z0, 10);
    for (const auto& r : log.rows) EXPECT_NE(r.descent, Descent::violated);
    EXPECT_FALSE(log.aborted);
  }
}

TEST(Controller, RejectsBadFamilyMenus) {
  const auto& s = setup();
  auto swapped = s.families;
  std::swap(swapped[0], swapped[1]);
  EXPECT_THROW((Controller<AnyKernel>(s.data, s.fit.model, swapped)), ConfigError);
  EXPECT_THROW((Controller<AnyKernel>(nullptr, s.fit.model, s.families)), ConfigError);
}
