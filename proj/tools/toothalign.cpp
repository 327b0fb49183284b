// Command-line front end. JSON results go to stdout, diagnostics to stderr.
// Exit codes: 0 success, 1 invalid input or usage, 2 failed computation.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "toothalign/arch.hpp"
#include "toothalign/augment.hpp"
#include "toothalign/case_model.hpp"
#include "toothalign/config.hpp"
#include "toothalign/errors.hpp"
#include "toothalign/geometry.hpp"
#include "toothalign/losses.hpp"
#include "toothalign/metrics.hpp"
#include "toothalign/rng.hpp"
#include "toothalign/swin.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace toothalign;

namespace {

constexpr const char* kCaseSuffix = ".case.json";

json vec_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json points_json(const std::vector<Vec3>& pts) {
  json a = json::array();
  for (const Vec3& p : pts) a.push_back(vec_json(p));
  return a;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::InvalidArgument, "cannot create directory " + dir.string());
}

fs::path case_path(const fs::path& dir, const std::string& id) { return dir / (id + kCaseSuffix); }

/// Files given directly plus every *.case.json inside given directories,
/// each directory listing sorted by name.
std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const std::string& s : inputs) {
    const fs::path p(s);
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(p)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > std::string(kCaseSuffix).size() &&
            name.ends_with(kCaseSuffix)) {
          found.push_back(e.path());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  if (out.empty()) throw Error(ErrorCode::InvalidArgument, "no input cases");
  return out;
}

json transform_json(const RigidTransform& t) {
  const auto q = t.rotation.components();
  return {{"q", json::array({q[0], q[1], q[2], q[3]})},
          {"t", vec_json(t.translation)},
          {"pivot", vec_json(t.pivot)}};
}

json transforms_json(const TransformMap& m) {
  json j = json::object();
  for (const auto& [id, t] : m) j[std::to_string(id.value())] = transform_json(t);
  return j;
}

json breakdown_json(const LossBreakdown& b) {
  json j = {{"l_recon", b.l_recon},     {"l_rotate", b.l_rotate},     {"l_trans", b.l_trans},
            {"l_val", b.l_val},         {"l_fit", b.l_fit},           {"l_uni_ant", b.l_uni_ant},
            {"l_uni_pior", b.l_uni_pior}, {"l_uni", b.l_uni},         {"total", b.total}};
  return j;
}

json report_json(const ConstraintReport& r) {
  return {{"collisions", r.collisions},
          {"gap_violations", r.gap_violations},
          {"arch_violations", r.arch_violations},
          {"max_gap", r.max_gap},
          {"max_arch_distance", r.max_arch_distance},
          {"ok", r.ok()}};
}

json metrics_json(const CaseMetrics& m) {
  return {{"ADD", m.add}, {"AUC", m.auc}, {"ME_rotate_deg", m.me_rotate}, {"ME_translate_mm", m.me_translate}};
}

/// Network prediction applied to the current pre-treatment geometry; the
/// ground truth (if any) rides along untouched.
Case predict_and_assemble(const Case& c, const WeightSet& w, const Config& cfg) {
  const TransformMap t = predict_case(c.pre_view(), w, cfg.ordering, cfg.image_options());
  TransformMap moved;
  for (const auto& [id, tr] : t) {
    if (c.find(id)->moved) moved.emplace(id, tr);
  }
  return tooth_assembler(c, moved);
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config_path;

  Config config() const {
    Config c = config_path.empty() ? Config{} : load_config(config_path);
    if (seed) c.seed = *seed;
    return c;
  }
};

// ---------------------------------------------------------------------------

struct GenArgs {
  int teeth = 14;
  int count = 1;
  std::string out;
};

void run_gen(const Globals& g, const GenArgs& a) {
  const Config cfg = g.config();
  if (a.count < 1) throw Error(ErrorCode::InvalidArgument, "--count must be at least 1");
  SynthParams params;
  params.teeth_per_jaw = a.teeth;
  ensure_dir(a.out);
  json written = json::array();
  for (int i = 0; i < a.count; ++i) {
    const SyntheticCase s = generate_synthetic_case(params, cfg.seed + static_cast<std::uint64_t>(i));
    const fs::path p = case_path(a.out, s.c.id);
    save_case(s.c, p);
    written.push_back({{"case_id", s.c.id}, {"path", p.string()}});
  }
  emit({{"written", written}});
}

struct SampleArgs {
  std::string input;
  std::size_t n = kPointsPerTooth;
};

void run_sample(const Globals&, const SampleArgs& a) {
  json j;
  try {
    j = json::parse(read_text(a.input));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string("$: ") + e.what());
  }
  if (!j.is_object() || !j.contains("points") || !j["points"].is_array() || j.size() != 1) {
    throw Error(ErrorCode::SchemaViolation, "$: expected {\"points\": [[x, y, z], ...]}");
  }
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < j["points"].size(); ++i) {
    const json& p = j["points"][i];
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number()) {
      throw Error(ErrorCode::SchemaViolation, "$.points[" + std::to_string(i) + "] must be [x, y, z]");
    }
    pts.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
  }
  const std::size_t start = farthest_from_centroid(pts);
  const std::vector<std::size_t> idx = fps_sample(pts, a.n, start);
  std::vector<Vec3> sel;
  for (std::size_t i : idx) sel.push_back(pts[i]);
  emit({{"start", start}, {"indices", idx}, {"points", points_json(sel)}});
}

struct SerializeArgs {
  std::string input;
  bool normalize = false;
};

void run_serialize(const Globals& g, const SerializeArgs& a) {
  const Config cfg = g.config();
  const Case c = load_case(a.input);
  std::optional<ArchLine> up, lo;
  std::optional<JawArches> arches;
  if (cfg.ordering == OrderingMode::arch_line) {
    if (!c.upper.present().empty()) up = fit_arch_line(c.upper);
    if (!c.lower.present().empty()) lo = fit_arch_line(c.lower);
    arches = JawArches{up ? &*up : nullptr, lo ? &*lo : nullptr};
  }
  ToothPointImage img = build_tooth_point_image(c, cfg.ordering, arches, cfg.image_options());
  if (a.normalize) img = normalize_image(img, mouth_center(c));
  json rows = json::array();
  json mask = json::array();
  for (std::size_t r = 0; r < ToothPointImage::rows; ++r) {
    mask.push_back(img.presence_mask[r]);
    json row = json::array();
    for (std::size_t col = 0; col < ToothPointImage::cols; ++col)
      row.push_back(json::array({img.at(r, col, 0), img.at(r, col, 1), img.at(r, col, 2)}));
    rows.push_back(std::move(row));
  }
  emit({{"case_id", c.id},
        {"ordering", std::string(ordering_name(cfg.ordering))},
        {"normalized", a.normalize},
        {"shape", json::array({ToothPointImage::rows, ToothPointImage::cols, ToothPointImage::channels})},
        {"presence_mask", mask},
        {"data", rows}});
}

struct ArchArgs {
  std::string input;
  std::string jaw = "upper";
  std::size_t samples = 256;
};

void run_arch_export(const Globals&, const ArchArgs& a) {
  const Case c = load_case(a.input);
  const JawSide side = a.jaw == "upper" ? JawSide::upper : JawSide::lower;
  const ArchLine arch = fit_arch_line(c.jaw(side));
  emit({{"case_id", c.id},
        {"jaw", a.jaw},
        {"length", arch.length()},
        {"midline", arch.midline()},
        {"knots", points_json(arch.knots())},
        {"polyline", points_json(arch_polyline(arch, a.samples))}});
}

struct AugmentArgs {
  std::vector<std::string> inputs;
  std::string mode = "constrained";
  std::optional<double> ratio;
  std::string out;
};

void run_augment(const Globals& g, const AugmentArgs& a) {
  Config cfg = g.config();
  if (a.ratio) {
    if (a.mode == "constrained") cfg.augment.constraint_ratio = *a.ratio;
    else cfg.augment.ordinary_prob = *a.ratio;
  }
  cfg.augment.validate();
  const std::vector<fs::path> files = expand_inputs(a.inputs);
  std::vector<Case> cases;
  for (const fs::path& p : files) cases.push_back(load_case(p));
  ensure_dir(a.out);

  json reports = json::array();
  if (a.mode == "constrained") {
    // ratio = share of the input set that receives an augmented copy
    const std::size_t n = cases.size();
    const auto n_aug = static_cast<std::size_t>(std::ceil(cfg.augment.constraint_ratio * static_cast<double>(n) - 1e-9));
    const std::vector<std::size_t> order = order_random(n, derive_seed(cfg.seed, "augment_select"));
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(std::min(n_aug, n)));
    std::sort(chosen.begin(), chosen.end());
    for (std::size_t i : chosen) {
      const Case& src = cases[i];
      if (!src.is_training_pair()) {
        throw Error(ErrorCode::SchemaViolation, src.id + ": constrained augmentation needs ground truth");
      }
      AugmentResult r = constrained_augment_case(src, cfg.seed, cfg.augment);
      r.c.id = src.id + "-caug";
      const fs::path p = case_path(a.out, r.c.id);
      save_case(r.c, p);
      reports.push_back({{"case_id", r.c.id},
                         {"source_id", src.id},
                         {"mode", "constrained"},
                         {"path", p.string()},
                         {"collision_iterations", r.iterations},
                         {"max_rotation_deg", r.max_rotation_deg},
                         {"upper", report_json(r.upper)},
                         {"lower", report_json(r.lower)},
                         {"violations", r.upper.collisions + r.upper.gap_violations + r.upper.arch_violations +
                                            r.lower.collisions + r.lower.gap_violations + r.lower.arch_violations}});
    }
  } else if (a.mode == "ordinary") {
    for (const Case& src : cases) {
      OrdinaryResult r = ordinary_augment(src, cfg.seed, cfg.augment);
      r.c.id = src.id + "-oaug";
      const fs::path p = case_path(a.out, r.c.id);
      save_case(r.c, p);
      reports.push_back({{"case_id", r.c.id},
                         {"source_id", src.id},
                         {"mode", "ordinary"},
                         {"path", p.string()},
                         {"triggered", r.triggered}});
    }
  } else {
    throw Error(ErrorCode::InvalidArgument, "--mode must be constrained or ordinary");
  }
  emit({{"reports", reports}});
}

struct LossArgs {
  std::string pred, gt, pre, weights;
  bool test_mode = false;
};

void run_loss(const Globals& g, const LossArgs& a) {
  Config cfg = g.config();
  if (!a.weights.empty()) {
    json w;
    try {
      w = json::parse(read_text(a.weights));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::ConfigError, std::string("weights file: ") + e.what());
    }
    cfg.loss = config_from_json_text(json{{"loss", w}}.dump()).loss;
  }
  const Case pred = load_case(a.pred);
  const Case gt = load_case(a.gt);
  const Case pre = a.pre.empty() ? gt : load_case(a.pre);
  const LossBreakdown b = total_loss(pred, gt, pre, cfg.loss, !a.test_mode);
  emit(breakdown_json(b));
}

struct ForwardArgs {
  std::string input;
  std::string out;
};

void run_forward(const Globals& g, const ForwardArgs& a) {
  const Config cfg = g.config();
  const Case c = load_case(a.input);
  const WeightSet w = WeightSet::generate(cfg.seed, cfg.swin());
  const TransformMap t = predict_case(c.pre_view(), w, cfg.ordering, cfg.image_options());
  json j = {{"case_id", c.id}, {"seed", cfg.seed}, {"transforms", transforms_json(t)}};
  if (!a.out.empty()) {
    TransformMap moved;
    for (const auto& [id, tr] : t) {
      if (c.find(id)->moved) moved.emplace(id, tr);
    }
    Case pred = tooth_assembler(c.pre_view(), moved);
    save_case(pred, a.out);
    j["path"] = a.out;
  }
  emit(j);
}

struct EvalArgs {
  std::string pred_dir, gt_dir, pre_dir;
  double k = kDefaultAucK;
};

void run_eval(const Globals&, const EvalArgs& a) {
  const std::vector<fs::path> gts = expand_inputs({a.gt_dir});
  std::vector<CaseMetrics> per_case;
  std::vector<double> pooled;
  json rows = json::array();
  for (const fs::path& gp : gts) {
    const Case gt = load_case(gp);
    const Case pred = load_case(fs::path(a.pred_dir) / gp.filename());
    std::optional<Case> pre;
    if (!a.pre_dir.empty()) pre = load_case(fs::path(a.pre_dir) / gp.filename());
    CaseMetrics m = evaluate_case(pred, gt, pre ? &*pre : nullptr, a.k);
    json row = metrics_json(m);
    row["case_id"] = gt.id;
    rows.push_back(row);
    pooled.insert(pooled.end(), m.distances.begin(), m.distances.end());
    per_case.push_back(std::move(m));
  }
  const MetricSummary s = summarize(per_case);
  const AddCurve curve = add_curve(pooled, a.k);
  emit({{"ADD", s.add},
        {"AUC", s.auc},
        {"ME_rotate_deg", s.me_rotate},
        {"ME_translate_mm", s.me_translate},
        {"k", a.k},
        {"cases", rows},
        {"curve", {{"thresholds", curve.thresholds}, {"fractions", curve.fractions}}}});
}

struct IterateArgs {
  std::string input;
  int n = 6;
  double k = kDefaultAucK;
};

void run_iterate(const Globals& g, const IterateArgs& a) {
  const Config cfg = g.config();
  const Case c = load_case(a.input);
  if (!c.is_training_pair()) throw Error(ErrorCode::SchemaViolation, c.id + ": iterate needs ground truth");
  const WeightSet w = WeightSet::generate(cfg.seed, cfg.swin());
  const std::vector<Case> traj = iterate_predict([&](const Case& x) { return predict_and_assemble(x, w, cfg); }, c, a.n);
  const Case gt = c.ground_truth_view();
  const Case pre = c.pre_view();
  json rows = json::array();
  for (std::size_t i = 0; i < traj.size(); ++i) {
    json row = metrics_json(evaluate_case(traj[i].pre_view(), gt, &pre, a.k));
    row["iteration"] = i + 1;
    rows.push_back(row);
  }
  emit({{"case_id", c.id}, {"seed", cfg.seed}, {"k", a.k}, {"iterations", rows}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tooth arrangement geometry toolkit"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Master seed; every random stage derives from it")->group("Global");
  app.add_option("--config", g.config_path, "JSON config file (unknown keys are rejected)")
      ->check(CLI::ExistingFile)
      ->group("Global");
  app.fallthrough();

  GenArgs gen;
  auto* c_gen = app.add_subcommand("gen", "Generate synthetic training pairs");
  c_gen->add_option("--teeth", gen.teeth, "Teeth per jaw (8-16)");
  c_gen->add_option("--count", gen.count, "Number of cases (seeds seed, seed+1, ...)");
  c_gen->add_option("-o,--out", gen.out, "Output directory")->required();

  SampleArgs sample;
  auto* c_sample = app.add_subcommand("sample", "Farthest point sampling of {\"points\": [...]}");
  c_sample->add_option("input", sample.input)->required()->check(CLI::ExistingFile);
  c_sample->add_option("--n", sample.n, "Samples to keep");

  SerializeArgs ser;
  auto* c_ser = app.add_subcommand("serialize", "Tooth point image of a case");
  c_ser->add_option("input", ser.input)->required()->check(CLI::ExistingFile);
  c_ser->add_flag("--normalize", ser.normalize, "Centre on the mouth and scale as fed to the network");

  ArchArgs arch;
  auto* c_arch = app.add_subcommand("arch", "Dental arch line tools");
  c_arch->require_subcommand(1);
  auto* c_arch_export = c_arch->add_subcommand("export", "Arch line polyline of one jaw");
  c_arch_export->add_option("input", arch.input)->required()->check(CLI::ExistingFile);
  c_arch_export->add_option("--jaw", arch.jaw)->check(CLI::IsMember({"upper", "lower"}));
  c_arch_export->add_option("--samples", arch.samples, "Uniform arc-length samples")->check(CLI::Range(2, 100000));

  AugmentArgs aug;
  auto* c_aug = app.add_subcommand("augment", "Constrained or ordinary augmentation");
  c_aug->add_option("inputs", aug.inputs, "Case files or directories")->required();
  c_aug->add_option("--mode", aug.mode)->check(CLI::IsMember({"constrained", "ordinary"}));
  c_aug->add_option("--ratio", aug.ratio,
                    "constrained: share of inputs augmented; ordinary: trigger probability");
  c_aug->add_option("-o,--out", aug.out, "Output directory")->required();

  LossArgs loss;
  auto* c_loss = app.add_subcommand("loss", "Loss breakdown of a predicted arrangement");
  c_loss->add_option("--pred", loss.pred)->required()->check(CLI::ExistingFile);
  c_loss->add_option("--gt", loss.gt)->required()->check(CLI::ExistingFile);
  c_loss->add_option("--pre", loss.pre, "Pre-treatment reference (default: the gt case)")->check(CLI::ExistingFile);
  c_loss->add_option("--weights", loss.weights, "JSON object of loss weights")->check(CLI::ExistingFile);
  c_loss->add_flag("--test-mode", loss.test_mode, "Disable enhancement weights");

  ForwardArgs fwd;
  auto* c_fwd = app.add_subcommand("forward", "Predict per-tooth transforms with seeded weights");
  c_fwd->add_option("input", fwd.input)->required()->check(CLI::ExistingFile);
  c_fwd->add_option("-o,--out", fwd.out, "Also write the predicted case here");

  EvalArgs ev;
  auto* c_eval = app.add_subcommand("eval", "ADD, AUC and pose errors over a test set");
  c_eval->add_option("--pred-dir", ev.pred_dir)->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--gt-dir", ev.gt_dir)->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--pre-dir", ev.pre_dir)->check(CLI::ExistingDirectory);
  c_eval->add_option("--k", ev.k, "AUC threshold, mm");

  IterateArgs it;
  auto* c_it = app.add_subcommand("iterate", "Feed predictions back as new input");
  c_it->add_option("input", it.input)->required()->check(CLI::ExistingFile);
  c_it->add_option("-n", it.n, "Iterations");
  c_it->add_option("--k", it.k, "AUC threshold, mm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 1;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*c_gen) run_gen(g, gen);
    else if (*c_sample) run_sample(g, sample);
    else if (*c_ser) run_serialize(g, ser);
    else if (*c_arch_export) run_arch_export(g, arch);
    else if (*c_aug) run_augment(g, aug);
    else if (*c_loss) run_loss(g, loss);
    else if (*c_fwd) run_forward(g, fwd);
    else if (*c_eval) run_eval(g, ev);
    else if (*c_it) run_iterate(g, it);
  } catch (const Error& e) {
    std::cerr << "error [" << error_name(e.code()) << "]: " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
