#include "toothalign/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "toothalign/errors.hpp"

namespace toothalign {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& m) { throw Error(ErrorCode::ConfigError, m); }

void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path + " must be an object");
}

double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path + " must be a number");
  return j.get<double>();
}

std::uint64_t get_unsigned(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) fail(path + " must be a nonnegative integer");
  return j.get<std::uint64_t>();
}

bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path + " must be a boolean");
  return j.get<bool>();
}

void read_augment(const json& j, AugmentConfig& a) {
  expect_object(j, "$.augment");
  for (const auto& [key, v] : j.items()) {
    const std::string path = "$.augment." + key;
    if (key == "rot_range") a.rot_range = get_number(v, path);
    else if (key == "trans_mu") a.trans_mu = get_number(v, path);
    else if (key == "trans_sigma") a.trans_sigma = get_number(v, path);
    else if (key == "gap_threshold") a.gap_threshold = get_number(v, path);
    else if (key == "arch_dist_min") a.arch_dist_min = get_number(v, path);
    else if (key == "arch_dist_max") a.arch_dist_max = get_number(v, path);
    else if (key == "constraint_ratio") a.constraint_ratio = get_number(v, path);
    else if (key == "ordinary_prob") a.ordinary_prob = get_number(v, path);
    else if (key == "max_collision_iters") {
      if (!v.is_number_integer()) fail(path + " must be an integer");
      a.max_collision_iters = v.get<int>();
    } else {
      fail("unknown key " + path);
    }
  }
}

void read_loss(const json& j, LossWeights& w) {
  expect_object(j, "$.loss");
  for (const auto& [key, v] : j.items()) {
    const std::string path = "$.loss." + key;
    if (key == "delta0") w.delta0 = get_number(v, path);
    else if (key == "delta1") w.delta1 = get_number(v, path);
    else if (key == "delta2") w.delta2 = get_number(v, path);
    else if (key == "delta3") w.delta3 = get_number(v, path);
    else if (key == "omega") w.omega = get_number(v, path);
    else if (key == "w_pior") w.w_pior = get_number(v, path);
    else if (key == "omega_ant") w.omega_ant = get_number(v, path);
    else if (key == "tau") w.tau = get_number(v, path);
    else if (key == "max_t") w.max_t = get_number(v, path);
    else fail("unknown key " + path);
  }
}

}  // namespace

void Config::validate() const {
  if (n_points != kPointsPerTooth) fail("n_points must be " + std::to_string(kPointsPerTooth));
  if (window < 2 || window % 2 != 0 || kToothSlots % window != 0) {
    fail("window must be an even divisor of " + std::to_string(kToothSlots));
  }
  augment.validate();
  loss.validate();
}

SwinConfig Config::swin() const {
  SwinConfig s;
  s.window = window;
  s.shift = window / 2;
  return s;
}

Config config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("config is not valid JSON: ") + e.what());
  }
  expect_object(j, "$");
  Config c;
  for (const auto& [key, v] : j.items()) {
    const std::string path = "$." + key;
    if (key == "seed") c.seed = get_unsigned(v, path);
    else if (key == "ordering") {
      if (!v.is_string()) fail(path + " must be a string");
      c.ordering = parse_ordering(v.get<std::string>());
    } else if (key == "n_points") c.n_points = get_unsigned(v, path);
    else if (key == "window") c.window = get_unsigned(v, path);
    else if (key == "labial_positive") c.labial_positive = get_bool(v, path);
    else if (key == "augment") read_augment(v, c.augment);
    else if (key == "loss") read_loss(v, c.loss);
    else fail("unknown key " + path);
  }
  c.validate();
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const Config& c) {
  const AugmentConfig& a = c.augment;
  const LossWeights& w = c.loss;
  json j = {
      {"seed", c.seed},
      {"ordering", std::string(ordering_name(c.ordering))},
      {"n_points", c.n_points},
      {"window", c.window},
      {"labial_positive", c.labial_positive},
      {"augment",
       {{"rot_range", a.rot_range},
        {"trans_mu", a.trans_mu},
        {"trans_sigma", a.trans_sigma},
        {"gap_threshold", a.gap_threshold},
        {"arch_dist_min", a.arch_dist_min},
        {"arch_dist_max", a.arch_dist_max},
        {"constraint_ratio", a.constraint_ratio},
        {"ordinary_prob", a.ordinary_prob},
        {"max_collision_iters", a.max_collision_iters}}},
      {"loss",
       {{"delta0", w.delta0},
        {"delta1", w.delta1},
        {"delta2", w.delta2},
        {"delta3", w.delta3},
        {"omega", w.omega},
        {"w_pior", w.w_pior},
        {"omega_ant", w.omega_ant},
        {"tau", w.tau},
        {"max_t", w.max_t}}},
  };
  return j.dump(2) + "\n";
}

}  // namespace toothalign
