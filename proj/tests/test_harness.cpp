#include "invctl/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace invctl;

namespace {
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}
}  // namespace

TEST(Harness, RmseOfZerosAndKnownSequence) {
  EXPECT_EQ(rmse_displayed({0.0, 0.0, 0.0}), 0.0);
  // sqrt(1 + 4 + 4) / 3
  EXPECT_DOUBLE_EQ(rmse_displayed({1.0, 2.0, 2.0}), 1.0);
  EXPECT_DOUBLE_EQ(rms({1.0, 2.0, 2.0}), std::sqrt(3.0));
}

TEST(Harness, NumericalPipelineEndToEnd) {
  const auto dir = std::filesystem::temp_directory_path() / "invctl_harness_test";
  std::filesystem::remove_all(dir);
  RunConfig cfg = default_config("numerical");
  cfg.out = dir;
  cfg.verify_samples = 200;
  cfg.sphere_samples = 20;
  cfg.geometry_configs = 20;
  std::ostringstream sink;
  ASSERT_EQ(cmd_collect(cfg, sink), 0);
  ASSERT_EQ(cmd_build(cfg, sink), 0);
  ASSERT_EQ(cmd_simulate(cfg, sink), 0);
  const std::string first = slurp(Layout{dir}.run(2));
  std::ostringstream verify_log;
  EXPECT_EQ(cmd_verify(cfg, verify_log), 0) << verify_log.str();
  EXPECT_NE(verify_log.str().find("PASS bound_gamma_u checked=200 "), std::string::npos) << verify_log.str();
  ASSERT_EQ(cmd_report(cfg, sink), 0);
  EXPECT_TRUE(std::filesystem::exists(Layout{dir}.report()));

  // regulation from the origin
  const auto steps = read_run_log(Layout{dir}.run(2));
  ASSERT_EQ(steps.size(), 10u);
  for (std::size_t t = 3; t < steps.size(); ++t) EXPECT_LE(std::abs(steps[t].y_next), 0.15);

  // rerun gives identical logs
  ASSERT_EQ(cmd_simulate(cfg, sink), 0);
  EXPECT_EQ(slurp(Layout{dir}.run(2)), first);

  // negated radius in a family dump is caught by verify
  const auto fam = Layout{dir}.family(4);
  std::string text = slurp(fam);
  const auto pos = text.find("\n1,");
  ASSERT_NE(pos, std::string::npos);
  const auto comma = text.find(',', text.find(',', pos + 3) + 1);
  text.insert(comma + 1, "-");
  std::ofstream(fam) << text;
  std::ostringstream out;
  EXPECT_EQ(cmd_verify(cfg, out), 1);
  EXPECT_NE(out.str().find("FAIL level_soundness"), std::string::npos) << out.str();
  std::filesystem::remove_all(dir);
}

TEST(Harness, MissingArtifactsAreDataErrors) {
  RunConfig cfg = default_config("numerical");
  cfg.out = std::filesystem::temp_directory_path() / "invctl_harness_missing";
  std::filesystem::remove_all(cfg.out);
  std::ostringstream sink;
  EXPECT_THROW(cmd_build(cfg, sink), DataError);
  std::filesystem::remove_all(cfg.out);
}
