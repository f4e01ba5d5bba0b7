#include "invctl/config.hpp"

#include <gtest/gtest.h>

using namespace invctl;

TEST(Config, DefaultsPerPlant) {
  const auto n = load_config_text("");
  EXPECT_EQ(n.plant, "numerical");
  EXPECT_EQ(n.delay, 1);
  EXPECT_EQ(n.initial_states.size(), 5u);
  const auto p = load_config_text("[run]\nplant = pendulum\n");
  EXPECT_EQ(p.delay, 2);
  EXPECT_EQ(p.horizon, 500);
  EXPECT_EQ(p.gamma_mode, GammaMode::linear);
  EXPECT_DOUBLE_EQ(p.gamma_slope, 1.005);
}

TEST(Config, KeysAndOverrides) {
  const auto c = load_config_text(
      "[run]\nseed = 5\n[controller]\ndeltas = 0.2, 0.4\nkappa_bar = 3\n"
      "[simulate]\ninitial_states = 0,0,0; 1,1,0\n[bounds]\nGamma = auto\n",
      ConfigOverrides{std::nullopt, 9, std::string("o"), true});
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.out, "o");
  EXPECT_TRUE(c.noisy);
  EXPECT_EQ(c.deltas, (std::vector<double>{0.2, 0.4}));
  EXPECT_EQ(c.kappa_bar, 3);
  EXPECT_EQ(c.initial_states.size(), 2u);
  EXPECT_FALSE(c.Gamma.has_value());
}

TEST(Config, SchemaViolationsAreConfigErrors) {
  EXPECT_THROW(load_config_text("[nope]\nx=1\n"), ConfigError);
  EXPECT_THROW(load_config_text("[run]\nsede=1\n"), ConfigError);
  EXPECT_THROW(load_config_text("[controller]\ndeltas = 0.5, 0.2\n"), ConfigError);
  EXPECT_THROW(load_config_text("[kernel]\nlambda = -1\n"), ConfigError);
  EXPECT_THROW(load_config_text("[kernel]\nsignal_scale = abc\n"), ConfigError);
  EXPECT_THROW(load_config_text("[run]\nplant = cartpole\n"), ConfigError);
  EXPECT_THROW(load_config_text("[data]\ndelay = 2\n"), ConfigError);
  EXPECT_THROW(load_config_text("[simulate]\ninitial_states = 0,0\n"), ConfigError);
}
