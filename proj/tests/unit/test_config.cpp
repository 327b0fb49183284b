#include <gtest/gtest.h>

#include "toothalign/config.hpp"
#include "toothalign/errors.hpp"

using namespace toothalign;

namespace {

ErrorCode code_of(const std::string& text) {
  try {
    config_from_json_text(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "accepted: " << text;
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Config, DefaultsAndRoundTrip) {
  const Config c = config_from_json_text("{}");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.window, 8u);
  EXPECT_EQ(c.swin().shift, 4u);
  EXPECT_EQ(c.loss.tau, 0.07);
  EXPECT_EQ(c.augment.gap_threshold, 2.35);
  const std::string text = config_to_json_text(c);
  EXPECT_EQ(config_to_json_text(config_from_json_text(text)), text);
}

TEST(Config, NestedValues) {
  const Config c = config_from_json_text(
      R"({"seed": 9, "ordering": "local_z", "window": 4, "augment": {"rot_range": 5}, "loss": {"delta2": 0.5}})");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.ordering, OrderingMode::local_z);
  EXPECT_EQ(c.swin().window, 4u);
  EXPECT_EQ(c.swin().shift, 2u);
  EXPECT_EQ(c.augment.rot_range, 5.0);
  EXPECT_EQ(c.loss.delta2, 0.5);
}

TEST(Config, Rejections) {
  EXPECT_EQ(code_of("{"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of(R"({"sead": 1})"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of(R"({"augment": {"rot": 1}})"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of(R"({"seed": "x"})"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of(R"({"n_points": 256})"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of(R"({"window": 6})"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of(R"({"ordering": "spiral"})"), ErrorCode::ConfigError);
  EXPECT_EQ(code_of(R"({"loss": {"tau": -1}})"), ErrorCode::ConfigError);
  try {
    config_from_json_text(R"({"augment": {"rot": 1}})");
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("$.augment.rot"), std::string::npos);
  }
}
