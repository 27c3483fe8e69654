// Command-line entry point. Every subcommand writes machine-readable JSON;
// failures print {"error": kind, "message": ...} to stderr and exit nonzero.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "slumroad/slumroad.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slumroad;

namespace {

struct Common {
  std::string config;
  std::string slum;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--slum", c.slum, "Slum GeoJSON or graph document; overrides the config")->check(CLI::ExistingFile);
  cmd->add_option("-o,--output-dir", c.output_dir, "Output directory; overrides the config");
  cmd->add_option("--seed", c.seed, "Single seed; overrides the config");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.config.empty()) apply_env_overrides(cfg);
  if (!c.slum.empty()) {
    cfg.slum.kind = "file";
    cfg.slum.path = c.slum;
  }
  if (!c.output_dir.empty()) cfg.output_dir = c.output_dir;
  if (c.seed) cfg.seeds = {*c.seed};
  return cfg;
}

void emit(const json& j) { std::cout << j.dump(2) << "\n"; }

json graph_summary(const std::shared_ptr<const SlumContext>& ctx) {
  const PlanarGraph& g = ctx->graph;
  const SlumGraph s(ctx);
  const auto nc = static_cast<std::int64_t>(ctx->candidates.size());
  return {{"slum", ctx->id},
          {"nodes", g.num_nodes()},
          {"edges", g.num_edges()},
          {"faces", g.num_faces()},
          {"candidates", nc},
          {"euler_characteristic", g.euler_characteristic()},
          {"connected_at_reset", s.connected_count()},
          {"disconnection_ratio", 1.0 - static_cast<double>(s.connected_count()) / static_cast<double>(g.num_faces())},
          {"solution_space_log10_half_budget", solution_space_log10(nc, nc / 2)},
          {"invariant_violations", invariant_violations(g)}};
}

std::string seed_suffix(const ExperimentConfig& cfg, std::uint64_t seed) {
  return cfg.seeds.size() > 1 ? "_" + std::to_string(seed) : std::string();
}

int run(int argc, char** argv) {
  CLI::App app{"Road planning for informal settlements"};
  app.require_subcommand(1);

  // ingest
  std::string in_path, out_path;
  bool no_simplify = false, no_normalize = false;
  double merge_eps = PrepareOptions{}.merge_eps_ratio;
  auto* ingest = app.add_subcommand("ingest", "Slum GeoJSON -> planar graph document");
  ingest->add_option("-i,--input", in_path, "Slum GeoJSON")->required()->check(CLI::ExistingFile);
  ingest->add_option("-o,--output", out_path, "Graph document to write");
  ingest->add_flag("--no-simplify", no_simplify, "Keep every vertex and edge");
  ingest->add_flag("--no-normalize", no_normalize, "Keep input coordinates");
  ingest->add_option("--merge-eps", merge_eps, "Node merge distance as a fraction of the mean edge length");

  // generate
  int rows = 3, cols = 3;
  double jitter = 0.0;
  std::uint64_t gen_seed = 1;
  auto* generate = app.add_subcommand("generate", "Synthetic lattice slum");
  generate->add_option("--rows", rows, "Rows of places")->check(CLI::PositiveNumber);
  generate->add_option("--cols", cols, "Columns of places")->check(CLI::PositiveNumber);
  generate->add_option("--jitter", jitter, "Vertex jitter as a fraction of the cell size, in [0, 0.5)");
  generate->add_option("--seed", gen_seed, "Jitter seed");
  generate->add_option("-o,--output", out_path, "GeoJSON to write (stdout if omitted)");

  Common common;
  auto* train_cmd = app.add_subcommand("train", "Train the GNN policy");
  add_common(train_cmd, common);

  std::string checkpoint;
  auto* plan_cmd = app.add_subcommand("plan", "Greedy plan from a checkpoint");
  add_common(plan_cmd, common);
  plan_cmd->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required()->check(CLI::ExistingFile);

  std::string kind;
  bool unmasked = false;
  auto* baseline_cmd = app.add_subcommand("baseline", "Run one baseline planner");
  add_common(baseline_cmd, common);
  baseline_cmd->add_option("-k,--kind", kind, "random|greedy_a|greedy_c|mst|ga_generative|ga_swap|hs_mc")->required();
  baseline_cmd->add_flag("--unmasked", unmasked, "Use the trivial mask");

  auto* compare_cmd = app.add_subcommand("compare", "All configured planners over all seeds");
  add_common(compare_cmd, common);

  std::string plan_path, svg_path, geojson_path;
  auto* render_cmd = app.add_subcommand("render", "SVG and GeoJSON of a plan report");
  add_common(render_cmd, common);
  render_cmd->add_option("--plan", plan_path, "Plan report JSON")->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--svg", svg_path, "SVG to write");
  render_cmd->add_option("--geojson", geojson_path, "GeoJSON to write");

  std::string variant;
  auto* ablate_cmd = app.add_subcommand("ablate", "Full model against one ablated variant");
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--variant", variant, "zero_features:<cols>|no_n2e|no_f2e|no_e2e|no_propagation|no_mask")
      ->required();

  std::optional<int> oracle_budget;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive optimum (small instances)");
  add_common(oracle_cmd, common);
  oracle_cmd->add_option("--budget", oracle_budget, "Segment budget; defaults to the environment budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (*ingest) {
    PrepareOptions opt;
    opt.simplify = !no_simplify;
    opt.normalize = !no_normalize;
    opt.merge_eps_ratio = merge_eps;
    auto ctx = load_context(read_json_file(in_path), opt, fs::path(in_path).stem().string());
    if (!out_path.empty()) write_text_file(out_path, to_json(ctx->graph).dump(1) + "\n");
    emit(graph_summary(ctx));
    return 0;
  }
  if (*generate) {
    const std::string text = to_geojson(generate_synthetic(rows, cols, jitter, gen_seed)).dump(1) + "\n";
    if (out_path.empty()) std::cout << text;
    else write_text_file(out_path, text);
    return 0;
  }

  ExperimentConfig cfg = resolve(common);
  auto ctx = load_slum(cfg.slum);

  if (*train_cmd) {
    json summary = json::array();
    for (std::uint64_t seed : cfg.seeds) {
      TrainConfig tc = cfg.train;
      tc.seed = seed;
      std::vector<json> log;
      TrainResult tr = train(ctx, cfg.env, tc, cfg.model, [&](const IterationRecord& r) {
        std::cerr << "iter " << r.iteration << " reward " << r.mean_episode_reward << " greedy " << r.greedy_reward
                  << "\n";
        log.push_back(to_json(r));
      });
      const std::string sfx = seed_suffix(cfg, seed);
      const fs::path ckpt = cfg.output_dir / ("checkpoint" + sfx + ".json");
      fs::create_directories(cfg.output_dir);
      save_checkpoint(tr.best, ckpt.string());
      write_text_file(cfg.output_dir / ("train_log" + sfx + ".jsonl"), to_jsonl(log));
      summary.push_back({{"seed", seed},
                         {"iterations", tr.records.size()},
                         {"best_iteration", tr.best_iteration},
                         {"checkpoint", ckpt.string()}});
    }
    emit(summary);
    return 0;
  }
  if (*plan_cmd) {
    const PlanReport r = infer_plan(ctx, cfg.env, load_checkpoint(checkpoint));
    const json j = to_json(r);
    write_text_file(cfg.output_dir / "plan.json", j.dump(1) + "\n");
    emit(j);
    return 0;
  }
  if (*baseline_cmd) {
    BaselineSpec spec;
    for (const BaselineSpec& b : cfg.baselines)
      if (to_string(b.kind) == kind) spec = b;
    spec.kind = baseline_kind_from_string(kind);
    spec.masked = !unmasked;
    spec.seed = cfg.seeds.front();
    const BaselineRun run = run_baseline(spec, ctx, cfg.env);
    const json j = to_json(run.report);
    write_text_file(cfg.output_dir / ("baseline_" + kind + (unmasked ? "_unmasked" : "") + ".json"), j.dump(1) + "\n");
    emit(j);
    return 0;
  }
  if (*compare_cmd) {
    const auto results = compare(cfg, ctx);
    write_results(results, cfg.output_dir);
    emit(summary_record(results));
    return 0;
  }
  if (*render_cmd) {
    const PlanReport plan = plan_report_from_json(read_json_file(plan_path));
    if (svg_path.empty() && geojson_path.empty()) svg_path = (cfg.output_dir / "plan.svg").string();
    if (!svg_path.empty()) write_text_file(svg_path, render_svg(plan, ctx));
    if (!geojson_path.empty()) write_text_file(geojson_path, export_geojson(plan, ctx->graph).dump(1) + "\n");
    emit({{"svg", svg_path}, {"geojson", geojson_path}});
    return 0;
  }
  if (*ablate_cmd) {
    const auto results = ablate(cfg, ctx, parse_variant(variant));
    write_results(results, cfg.output_dir, "ablation");
    emit(summary_record(results));
    return 0;
  }
  if (*oracle_cmd) {
    if (!oracle_budget && cfg.env.budget_mode != BudgetMode::kSegmentCount)
      throw ConfigError("the oracle needs --budget (a segment count) in cost-budget mode");
    const int budget = oracle_budget ? *oracle_budget : static_cast<int>(Environment(ctx, cfg.env).budget());
    const json j = to_json(brute_force_oracle(ctx, budget));
    write_text_file(cfg.output_dir / "oracle.json", j.dump(1) + "\n");
    emit(j);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const slumroad::Error& e) {
    std::cerr << json{{"error", e.kind()}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
}
