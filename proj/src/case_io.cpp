#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "toothalign/case_model.hpp"
#include "toothalign/errors.hpp"

namespace toothalign {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + msg);
}

std::vector<Vec3> parse_points(const json& j, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array of [x, y, z]");
  std::vector<Vec3> pts;
  pts.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& p = j[i];
    const std::string pp = path + "[" + std::to_string(i) + "]";
    if (!p.is_array() || p.size() != 3) schema(pp, "expected [x, y, z]");
    Vec3 v;
    for (std::size_t k = 0; k < 3; ++k) {
      if (!p[k].is_number()) schema(pp + "[" + std::to_string(k) + "]", "expected a number");
      v[k] = p[k].get<double>();
    }
    pts.push_back(v);
  }
  return pts;
}

Tooth parse_tooth(const json& j, const std::string& path) {
  static const std::set<std::string> known{"id", "present", "moved", "points", "gt_points", "proxy_radius"};
  if (!j.is_object()) schema(path, "expected an object");
  for (const auto& [key, _] : j.items())
    if (!known.count(key)) schema(path + "." + key, "unknown field");
  for (const char* req : {"id", "present", "moved", "points"})
    if (!j.contains(req)) schema(path + "." + req, "missing required field");

  if (!j["id"].is_number_integer()) schema(path + ".id", "expected an integer");
  const auto id = j["id"].get<long long>();
  if (id < 1 || id > 32) schema(path + ".id", "tooth id " + std::to_string(id) + " outside 1..32");
  if (!j["present"].is_boolean()) schema(path + ".present", "expected a boolean");
  if (!j["moved"].is_boolean()) schema(path + ".moved", "expected a boolean");

  Tooth t;
  t.id = ToothId(static_cast<int>(id));
  t.present = j["present"].get<bool>();
  t.moved = j["moved"].get<bool>();
  t.points = parse_points(j["points"], path + ".points");
  if (j.contains("gt_points") && !j["gt_points"].is_null()) {
    t.gt_points = parse_points(j["gt_points"], path + ".gt_points");
  }
  if (j.contains("proxy_radius")) {
    if (!j["proxy_radius"].is_number()) schema(path + ".proxy_radius", "expected a number");
    t.proxy_radius = j["proxy_radius"].get<double>();
  }
  return t;
}

Jaw parse_jaw(const json& j, JawSide side, const std::string& path) {
  if (!j.is_array()) schema(path, "expected an array of teeth");
  if (j.size() > 16) schema(path, "more than 16 teeth");
  Jaw jaw;
  jaw.side = side;
  std::set<int> seen;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string tp = path + "[" + std::to_string(i) + "]";
    Tooth t = parse_tooth(j[i], tp);
    if (t.id.side() != side) schema(tp + ".id", "tooth " + std::to_string(t.id.value()) + " belongs to the other jaw");
    if (!seen.insert(t.id.value()).second) {
      throw Error(ErrorCode::DuplicateTooth, tp + ".id: tooth " + std::to_string(t.id.value()) + " repeated");
    }
    jaw.teeth.push_back(std::move(t));
  }
  std::sort(jaw.teeth.begin(), jaw.teeth.end(), [](const Tooth& a, const Tooth& b) { return a.id < b.id; });
  return jaw;
}

json points_json(const std::vector<Vec3>& pts) {
  json a = json::array();
  for (const Vec3& p : pts) a.push_back(json::array({p.x, p.y, p.z}));
  return a;
}

json jaw_json(const Jaw& jaw) {
  json a = json::array();
  for (const Tooth& t : jaw.teeth) {
    json o;
    o["id"] = t.id.value();
    o["present"] = t.present;
    o["moved"] = t.moved;
    o["points"] = points_json(t.points);
    if (t.gt_points) o["gt_points"] = points_json(*t.gt_points);
    o["proxy_radius"] = t.proxy_radius;
    a.push_back(std::move(o));
  }
  return a;
}

}  // namespace

Case case_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    schema("$", std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) schema("$", "expected an object");
  for (const auto& [key, _] : j.items())
    if (key != "id" && key != "upper" && key != "lower") schema("$." + key, "unknown field");
  for (const char* req : {"id", "upper", "lower"})
    if (!j.contains(req)) schema(std::string("$.") + req, "missing required field");
  if (!j["id"].is_string()) schema("$.id", "expected a string");

  Case c;
  c.id = j["id"].get<std::string>();
  c.upper = parse_jaw(j["upper"], JawSide::upper, "$.upper");
  c.lower = parse_jaw(j["lower"], JawSide::lower, "$.lower");
  validate_case(c);
  return c;
}

std::string case_to_json_text(const Case& c) {
  json j;
  j["id"] = c.id;
  j["upper"] = jaw_json(c.upper);
  j["lower"] = jaw_json(c.lower);
  return j.dump() + "\n";
}

Case load_case(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return case_from_json_text(ss.str());
}

void save_case(const Case& c, const std::filesystem::path& path) {
  validate_case(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out << case_to_json_text(c);
  if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + path.string());
}

}  // namespace toothalign
