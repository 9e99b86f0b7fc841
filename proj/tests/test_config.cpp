#include <gtest/gtest.h>

#include "platesim/config.hpp"

using namespace platesim;

TEST(Config, DefaultsAreValid) {
  RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.effective_controller().v_travel, 0.2);
  EXPECT_EQ(cfg.effective_detector().light_factor, 1.0);
}

TEST(Config, FileWithCommentsAndSpacing) {
  RunConfig cfg;
  apply_config_text(cfg,
                    "# sweep point\n"
                    "scenario = case3\n"
                    "speed=0.3\n"
                    "  detector.p_base = 0.8   # brighter\n"
                    "\n"
                    "noise.rng_seed = 7\n"
                    "controller.follow_direction = right\n"
                    "telemetry.drop = 0.1\n"
                    "seed = 123\n");
  EXPECT_EQ(cfg.scenario, "case3");
  EXPECT_EQ(cfg.speed, 0.3);
  EXPECT_EQ(cfg.detector.p_base, 0.8);
  EXPECT_EQ(cfg.noise.rng_seed, 7u);
  EXPECT_EQ(cfg.controller.follow_direction, FollowDirection::Right);
  EXPECT_EQ(cfg.drop_probability, 0.1);
  EXPECT_EQ(cfg.master_seed, 123u);
  EXPECT_EQ(cfg.effective_controller().v_travel, 0.3);
}

TEST(Config, ErrorsNameTheLineAndKey) {
  RunConfig cfg;
  try {
    apply_config_text(cfg, "speed = 0.2\ndetector.p_bse = 0.5\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("detector.p_bse"), std::string::npos);
  }
  EXPECT_THROW(apply_assignment(cfg, "speed = fast"), ConfigError);
  EXPECT_THROW(apply_assignment(cfg, "rounds = 2.5"), ConfigError);
  EXPECT_THROW(apply_assignment(cfg, "speed"), ConfigError);
  EXPECT_THROW(apply_assignment(cfg, "controller.follow_direction = up"), ConfigError);
}

TEST(Config, ValidationRejectsOutOfRange) {
  RunConfig cfg;
  cfg.speed = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.rounds = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.drop_probability = 1.5;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = RunConfig{};
  cfg.noise.range_sigma = -1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(Config, ScenarioResolution) {
  RunConfig cfg;
  cfg.scenario = "case4";
  EXPECT_EQ(resolve_world(cfg).plates.size(), 6u);
  cfg.scenario = "/nonexistent/world.txt";
  EXPECT_ANY_THROW(resolve_world(cfg));
}
