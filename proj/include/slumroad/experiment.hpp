#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/baselines.hpp"
#include "slumroad/errors.hpp"
#include "slumroad/neural.hpp"
#include "slumroad/plan_report.hpp"
#include "slumroad/synthetic.hpp"
#include "slumroad/trainer.hpp"

namespace slumroad {

// ---------------------------------------------------------------------------
// Configuration: one JSON document with sections slum, env, train, model,
// baselines, output and seeds. See docs/config.md.

struct SlumSource {
  std::string kind = "synthetic";  // "synthetic" or "file"
  int rows = 3;
  int cols = 3;
  double jitter = 0.0;
  std::uint64_t seed = 1;
  std::filesystem::path path;  // GeoJSON slum or graph document
  std::string id;
  PrepareOptions prepare;
};

struct ExperimentConfig {
  SlumSource slum;
  EnvConfig env;
  TrainConfig train;
  ModelConfig model;
  bool train_enabled = true;
  std::filesystem::path checkpoint;  // used instead of training when set and training is off
  std::vector<BaselineSpec> baselines;
  std::filesystem::path output_dir = "out";
  std::vector<std::uint64_t> seeds{1};

  bool learned_planner() const { return train_enabled || !checkpoint.empty(); }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& section, std::initializer_list<const char*> keys, const char* where) {
  if (!section.is_object()) throw ConfigError(std::string(where) + " must be an object");
  const std::set<std::string> known(keys.begin(), keys.end());
  for (const auto& [k, v] : section.items())
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class Enum>
Enum parse_enum(const std::string& s, std::initializer_list<std::pair<const char*, Enum>> table, const char* what) {
  for (const auto& [name, value] : table)
    if (s == name) return value;
  throw ConfigError(std::string("unknown ") + what + ": " + s);
}

}  // namespace detail

inline EnvConfig env_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"budget_mode", "budget", "budget_fraction", "alpha1", "alpha2", "relax_deadlock",
                             "d_normalization", "masking"},
                         "env");
  EnvConfig c;
  c.budget_mode = detail::parse_enum<BudgetMode>(
      j.value("budget_mode", "segment_count"),
      {{"segment_count", BudgetMode::kSegmentCount}, {"construction_cost", BudgetMode::kConstructionCost}}, "budget_mode");
  if (j.contains("budget") && !j["budget"].is_null()) c.budget = j["budget"].get<double>();
  c.budget_fraction = j.value("budget_fraction", c.budget_fraction);
  c.alpha1 = j.value("alpha1", c.alpha1);
  c.alpha2 = j.value("alpha2", c.alpha2);
  c.relax_deadlock = j.value("relax_deadlock", c.relax_deadlock);
  c.d_normalization = detail::parse_enum<DNormalization>(
      j.value("d_normalization", "mean_pairs"),
      {{"mean_pairs", DNormalization::kMeanPairs}, {"sum_times_pairs", DNormalization::kSumTimesPairs}}, "d_normalization");
  c.masking = detail::parse_enum<Masking>(j.value("masking", "staged"),
                                          {{"staged", Masking::kStaged}, {"trivial", Masking::kTrivial}}, "masking");
  return c;
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"enabled", "checkpoint", "gamma", "tau", "clip_eps", "entropy_beta", "value_coef",
                             "learning_rate", "weight_decay", "episodes_per_iter", "epochs_per_iter", "minibatch_size",
                             "max_iterations", "normalize_advantages", "early_stop", "plateau_window",
                             "plateau_tolerance", "seed"},
                         "train");
  TrainConfig c;
  c.gamma = j.value("gamma", c.gamma);
  c.tau = j.value("tau", c.tau);
  c.clip_eps = j.value("clip_eps", c.clip_eps);
  c.entropy_beta = j.value("entropy_beta", c.entropy_beta);
  c.value_coef = j.value("value_coef", c.value_coef);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.episodes_per_iter = j.value("episodes_per_iter", c.episodes_per_iter);
  c.epochs_per_iter = j.value("epochs_per_iter", c.epochs_per_iter);
  c.minibatch_size = j.value("minibatch_size", c.minibatch_size);
  c.max_iterations = j.value("max_iterations", c.max_iterations);
  c.normalize_advantages = j.value("normalize_advantages", c.normalize_advantages);
  c.early_stop = j.value("early_stop", c.early_stop);
  c.plateau_window = j.value("plateau_window", c.plateau_window);
  c.plateau_tolerance = j.value("plateau_tolerance", c.plateau_tolerance);
  c.seed = j.value("seed", c.seed);
  validate(c);
  return c;
}

inline BaselineSpec baseline_spec_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"kind", "masked", "seed", "population", "generations", "mutation_rate", "mutation_sigma",
                             "tournament", "elitism", "w_nr", "w_ad", "w_sc", "samples"},
                         "baseline");
  BaselineSpec s;
  s.kind = baseline_kind_from_string(j.at("kind").get<std::string>());
  s.masked = j.value("masked", s.masked);
  s.seed = j.value("seed", s.seed);
  s.ga.population = j.value("population", s.ga.population);
  s.ga.generations = j.value("generations", s.ga.generations);
  s.ga.mutation_rate = j.value("mutation_rate", s.ga.mutation_rate);
  s.ga.mutation_sigma = j.value("mutation_sigma", s.ga.mutation_sigma);
  s.ga.tournament = j.value("tournament", s.ga.tournament);
  s.ga.elitism = j.value("elitism", s.ga.elitism);
  s.ga.w_nr = j.value("w_nr", s.ga.w_nr);
  s.ga.w_ad = j.value("w_ad", s.ga.w_ad);
  s.ga.w_sc = j.value("w_sc", s.ga.w_sc);
  s.hs_samples = j.value("samples", s.hs_samples);
  if (s.kind == BaselineKind::kGreedyA && !s.masked) throw ConfigError("greedy_a is only defined with the mask");
  return s;
}

/// Input paths resolve against `base_dir` (the config file's directory).
inline ExperimentConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
  try {
    detail::reject_unknown(j, {"slum", "env", "train", "model", "baselines", "output", "seeds"}, "config");
    ExperimentConfig c;
    if (j.contains("slum")) {
      const auto& s = j["slum"];
      detail::reject_unknown(s, {"source", "rows", "cols", "jitter", "seed", "path", "id", "simplify",
                                 "merge_eps_ratio", "normalize"},
                             "slum");
      c.slum.kind = s.value("source", c.slum.kind);
      if (c.slum.kind != "synthetic" && c.slum.kind != "file") throw ConfigError("slum.source must be synthetic or file");
      c.slum.rows = s.value("rows", c.slum.rows);
      c.slum.cols = s.value("cols", c.slum.cols);
      c.slum.jitter = s.value("jitter", c.slum.jitter);
      c.slum.seed = s.value("seed", c.slum.seed);
      if (s.contains("path")) {
        std::filesystem::path p = s["path"].get<std::string>();
        c.slum.path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
      }
      if (c.slum.kind == "file" && c.slum.path.empty()) throw ConfigError("slum.path is required for file sources");
      c.slum.id = s.value("id", "");
      c.slum.prepare.simplify = s.value("simplify", c.slum.prepare.simplify);
      c.slum.prepare.merge_eps_ratio = s.value("merge_eps_ratio", c.slum.prepare.merge_eps_ratio);
      c.slum.prepare.normalize = s.value("normalize", c.slum.prepare.normalize);
    }
    if (j.contains("env")) c.env = env_config_from_json(j["env"]);
    if (j.contains("train")) {
      c.train = train_config_from_json(j["train"]);
      c.train_enabled = j["train"].value("enabled", true);
      if (j["train"].contains("checkpoint")) {
        std::filesystem::path p = j["train"]["checkpoint"].get<std::string>();
        c.checkpoint = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
      }
    }
    if (j.contains("model")) {
      detail::reject_unknown(j["model"], {"embed_dim", "layers", "policy_hidden", "value_hidden", "node_to_edge",
                                          "face_to_edge", "edge_self", "head_bias", "head_activation"},
                             "model");
      c.model = model_config_from_json(j["model"]);
    }
    if (j.contains("baselines"))
      for (const auto& b : j["baselines"]) c.baselines.push_back(baseline_spec_from_json(b));
    if (j.contains("output")) {
      detail::reject_unknown(j["output"], {"dir"}, "output");
      c.output_dir = j["output"].value("dir", "out");  // relative to the working directory
    }
    if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
    if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
    if (!c.learned_planner() && c.baselines.empty()) throw ConfigError("no planner requested");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

/// SLUMROAD_SEED replaces the seed list; SLUMROAD_OUTPUT_DIR the output directory.
inline void apply_env_overrides(ExperimentConfig& c) {
  if (const char* s = std::getenv("SLUMROAD_SEED"); s && *s) {
    try {
      c.seeds = {std::stoull(s)};
    } catch (const std::exception&) {
      throw ConfigError(std::string("SLUMROAD_SEED is not an unsigned integer: ") + s);
    }
  }
  if (const char* d = std::getenv("SLUMROAD_OUTPUT_DIR"); d && *d) c.output_dir = d;
}

inline nlohmann::json read_json_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open " + p.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(p.string() + ": " + e.what());
  }
}

inline void write_text_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out << text;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  ExperimentConfig c = config_from_json(read_json_file(path), path.parent_path());
  apply_env_overrides(c);
  return c;
}

inline std::shared_ptr<const SlumContext> load_slum(const SlumSource& s) {
  if (s.kind == "synthetic") {
    const std::string id = s.id.empty() ? synthetic_id(s.rows, s.cols, s.jitter, s.seed) : s.id;
    return load_context(generate_synthetic(s.rows, s.cols, s.jitter, s.seed), s.prepare, id);
  }
  const std::string id = s.id.empty() ? s.path.stem().string() : s.id;
  return load_context(read_json_file(s.path), s.prepare, id);
}

// ---------------------------------------------------------------------------
// Results

inline constexpr const char* kLearnedPlanner = "drl-gnn";

struct PlannerResult {
  std::string planner;
  std::uint64_t seed = 0;
  PlanReport report;
  std::vector<IterationRecord> curve;  // learned planners
  std::vector<double> ga_curve;        // genetic planners
};

inline nlohmann::json result_record(const PlannerResult& r) {
  return {{"type", "result"},
          {"planner", r.planner},
          {"seed", r.seed},
          {"slum", r.report.slum_id},
          {"NR", r.report.nr ? nlohmann::json(*r.report.nr) : nlohmann::json(nullptr)},
          {"AD", r.report.universal ? nlohmann::json(r.report.ad) : nlohmann::json("INF")},
          {"AD_value", r.report.ad},
          {"SC", r.report.sc},
          {"universal_connectivity", r.report.universal},
          {"total_reward", r.report.total_reward},
          {"steps", r.report.steps.size()},
          {"plan", to_json(r.report)}};
}

namespace detail {

inline nlohmann::json mean_spread(const std::vector<double>& xs) {
  if (xs.empty()) return nullptr;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0.0;
  for (double x : xs) v += (x - m) * (x - m);
  return {{"mean", m}, {"std", std::sqrt(v / static_cast<double>(xs.size()))},
          {"min", *std::min_element(xs.begin(), xs.end())}, {"max", *std::max_element(xs.begin(), xs.end())}};
}

}  // namespace detail

/// One summary row per planner, in order of first appearance.
inline nlohmann::json summary_record(const std::vector<PlannerResult>& results) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const PlannerResult*>> by;
  for (const PlannerResult& r : results) {
    if (!by.count(r.planner)) order.push_back(r.planner);
    by[r.planner].push_back(&r);
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const std::string& p : order) {
    std::vector<double> nr, ad, sc;
    std::size_t uc = 0;
    for (const PlannerResult* r : by[p]) {
      if (r->report.nr) nr.push_back(*r->report.nr);
      if (r->report.universal) ++uc;
      ad.push_back(r->report.ad);
      sc.push_back(r->report.sc);
    }
    rows.push_back({{"planner", p},
                    {"runs", by[p].size()},
                    {"universal_fraction", static_cast<double>(uc) / static_cast<double>(by[p].size())},
                    {"NR", detail::mean_spread(nr)},
                    {"AD", detail::mean_spread(ad)},
                    {"SC", detail::mean_spread(sc)}});
  }
  return {{"type", "summary"}, {"planners", rows}};
}

inline std::string to_jsonl(const std::vector<nlohmann::json>& lines) {
  std::string out;
  for (const auto& l : lines) out += l.dump() + "\n";
  return out;
}

/// Trains (or loads) the learned planner for one seed and runs greedy inference.
inline PlannerResult run_learned(const ExperimentConfig& cfg, const std::shared_ptr<const SlumContext>& ctx,
                                 std::uint64_t seed, const ModelConfig& model, const EnvConfig& env,
                                 const FeatureTransform& inference_transform = {},
                                 const std::string& planner = kLearnedPlanner, Params* trained = nullptr) {
  PlannerResult r;
  r.planner = planner;
  r.seed = seed;
  Params params;
  if (cfg.train_enabled) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    TrainResult tr = train(ctx, env, tc, model);
    params = std::move(tr.best);
    r.curve = std::move(tr.records);
  } else {
    params = load_checkpoint(cfg.checkpoint.string());
  }
  r.report = infer_plan(ctx, env, params, inference_transform, planner);
  if (trained) *trained = std::move(params);
  return r;
}

/// Every requested planner over every seed.
inline std::vector<PlannerResult> compare(const ExperimentConfig& cfg, const std::shared_ptr<const SlumContext>& ctx) {
  std::vector<PlannerResult> out;
  for (std::uint64_t seed : cfg.seeds) {
    if (cfg.learned_planner()) out.push_back(run_learned(cfg, ctx, seed, cfg.model, cfg.env));
    for (BaselineSpec spec : cfg.baselines) {
      spec.seed = seed;
      BaselineRun run = run_baseline(spec, ctx, cfg.env);
      out.push_back({planner_id(spec), seed, std::move(run.report), {}, std::move(run.ga_curve)});
    }
  }
  return out;
}

inline std::vector<nlohmann::json> curve_records(const std::vector<PlannerResult>& results) {
  std::vector<nlohmann::json> out;
  for (const PlannerResult& r : results) {
    for (const IterationRecord& it : r.curve) {
      nlohmann::json j = to_json(it);
      j["planner"] = r.planner;
      j["seed"] = r.seed;
      out.push_back(j);
    }
    for (std::size_t g = 0; g < r.ga_curve.size(); ++g)
      out.push_back({{"planner", r.planner}, {"seed", r.seed}, {"generation", g}, {"best_fitness", r.ga_curve[g]}});
  }
  return out;
}

/// Writes results.jsonl (records + summary) and curves.jsonl.
inline void write_results(const std::vector<PlannerResult>& results, const std::filesystem::path& dir,
                          const std::string& stem = "results") {
  std::vector<nlohmann::json> lines;
  for (const PlannerResult& r : results) lines.push_back(result_record(r));
  lines.push_back(summary_record(results));
  write_text_file(dir / (stem + ".jsonl"), to_jsonl(lines));
  write_text_file(dir / (stem == "results" ? std::string("curves.jsonl") : stem + "_curves.jsonl"),
                  to_jsonl(curve_records(results)));
}

// ---------------------------------------------------------------------------
// Ablations

struct AblationVariant {
  enum class Kind { kZeroFeatures, kNoNodeToEdge, kNoFaceToEdge, kNoEdgeSelf, kNoPropagation, kNoMask };
  Kind kind = Kind::kZeroFeatures;
  std::string name;
  std::vector<std::pair<char, std::size_t>> columns;  // ('n'|'e'|'f', column)
};

inline std::pair<char, std::size_t> feature_column(const std::string& name) {
  namespace ft = feature;
  static const std::map<std::string, std::pair<char, std::size_t>> table = {
      {"node.x", {'n', ft::kX}},
      {"node.y", {'n', ft::kY}},
      {"node.degree", {'n', ft::kDegree}},
      {"node.betweenness", {'n', ft::kBetweenness}},
      {"node.eigenvector", {'n', ft::kEigenvector}},
      {"node.closeness", {'n', ft::kCloseness}},
      {"node.on_road", {'n', ft::kOnRoad}},
      {"node.road_ratio", {'n', ft::kRoadRatio}},
      {"node.avg_n2n", {'n', ft::kAvgN2N}},
      {"edge.cost", {'e', ft::kCost}},
      {"edge.road", {'e', ft::kRoad}},
      {"edge.straightness", {'e', ft::kStraightness}},
      {"face.connected", {'f', ft::kConnected}},
      {"face.avg_f2f", {'f', ft::kAvgF2F}},
      {"face.f2e", {'f', ft::kF2E}},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw UnknownVariant("unknown feature column: " + name);
  return it->second;
}

/// "zero_features:<col>[,<col>...]", "no_n2e", "no_f2e", "no_e2e",
/// "no_propagation" or "no_mask".
inline AblationVariant parse_variant(const std::string& s) {
  AblationVariant v;
  v.name = s;
  using K = AblationVariant::Kind;
  if (s == "no_n2e") v.kind = K::kNoNodeToEdge;
  else if (s == "no_f2e") v.kind = K::kNoFaceToEdge;
  else if (s == "no_e2e") v.kind = K::kNoEdgeSelf;
  else if (s == "no_propagation") v.kind = K::kNoPropagation;
  else if (s == "no_mask") v.kind = K::kNoMask;
  else if (s.rfind("zero_features:", 0) == 0) {
    v.kind = K::kZeroFeatures;
    std::stringstream ss(s.substr(std::string("zero_features:").size()));
    std::string col;
    while (std::getline(ss, col, ','))
      if (!col.empty()) v.columns.push_back(feature_column(col));
    if (v.columns.empty()) throw UnknownVariant("zero_features needs at least one column");
  } else {
    throw UnknownVariant("unknown ablation variant: " + s);
  }
  return v;
}

inline FeatureTransform zero_columns(std::vector<std::pair<char, std::size_t>> cols) {
  return [cols = std::move(cols)](FeatureSet& fs) {
    for (const auto& [table, c] : cols) {
      Matrix& m = table == 'n' ? fs.node : table == 'e' ? fs.edge : fs.face;
      for (std::size_t r = 0; r < m.rows(); ++r) m(r, c) = 0.0;
    }
  };
}

/// The full model and the variant side by side, per seed.
inline std::vector<PlannerResult> ablate(const ExperimentConfig& cfg, const std::shared_ptr<const SlumContext>& ctx,
                                         const AblationVariant& v) {
  using K = AblationVariant::Kind;
  std::vector<PlannerResult> out;
  const std::string tag = std::string(kLearnedPlanner) + "[" + v.name + "]";
  for (std::uint64_t seed : cfg.seeds) {
    if (v.kind == K::kZeroFeatures) {
      Params params;
      out.push_back(run_learned(cfg, ctx, seed, cfg.model, cfg.env, {}, kLearnedPlanner, &params));
      PlannerResult z;
      z.planner = tag;
      z.seed = seed;
      z.report = infer_plan(ctx, cfg.env, params, zero_columns(v.columns), tag);
      out.push_back(std::move(z));
      continue;
    }
    if (!cfg.train_enabled) throw ConfigError("structural ablations need training enabled");
    out.push_back(run_learned(cfg, ctx, seed, cfg.model, cfg.env));
    ModelConfig model = cfg.model;
    EnvConfig env = cfg.env;
    if (v.kind == K::kNoNodeToEdge || v.kind == K::kNoPropagation) model.node_to_edge = false;
    if (v.kind == K::kNoFaceToEdge || v.kind == K::kNoPropagation) model.face_to_edge = false;
    if (v.kind == K::kNoEdgeSelf || v.kind == K::kNoPropagation) model.edge_self = false;
    if (v.kind == K::kNoMask) env.masking = Masking::kTrivial;
    out.push_back(run_learned(cfg, ctx, seed, model, env, {}, tag));
  }
  return out;
}

}  // namespace slumroad
