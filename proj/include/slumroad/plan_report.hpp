#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/env.hpp"

namespace slumroad {

struct PlanStep {
  int step = 0;  // 1-based
  EdgeId edge = -1;
  Stage stage = Stage::kConnect;  // stage in which the edge was planned
  double reward = 0.0;
  double cumulative_sc = 0.0;
  int connected = 0;  // connected faces after the step
};

struct PlanReport {
  std::string slum_id;
  std::string planner_id;
  BudgetMode budget_mode = BudgetMode::kSegmentCount;
  double budget = 0.0;
  std::vector<PlanStep> steps;
  std::optional<int> nr;
  double ad = 0.0;
  double sc = 0.0;
  bool universal = false;
  double total_reward = 0.0;
  int faces = 0;
  int connected_at_reset = 0;

  std::vector<EdgeId> edges() const {
    std::vector<EdgeId> out;
    for (const PlanStep& s : steps) out.push_back(s.edge);
    return out;
  }
};

inline const char* to_string(BudgetMode m) {
  return m == BudgetMode::kSegmentCount ? "segment_count" : "construction_cost";
}

inline nlohmann::json to_json(const PlanReport& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const PlanStep& s : r.steps) {
    steps.push_back({{"step", s.step},
                     {"edge", s.edge},
                     {"stage", to_string(s.stage)},
                     {"reward", s.reward},
                     {"cumulative_sc", s.cumulative_sc},
                     {"connected", s.connected}});
  }
  nlohmann::json finals = {{"NR", r.nr ? nlohmann::json(*r.nr) : nlohmann::json(nullptr)},
                           {"AD", r.universal ? nlohmann::json(r.ad) : nlohmann::json("INF")},
                           {"AD_value", r.ad},
                           {"SC", r.sc},
                           {"universal_connectivity", r.universal},
                           {"total_reward", r.total_reward}};
  return {{"slum", r.slum_id},
          {"planner", r.planner_id},
          {"budget_mode", to_string(r.budget_mode)},
          {"budget", r.budget},
          {"faces", r.faces},
          {"connected_at_reset", r.connected_at_reset},
          {"steps", steps},
          {"finals", finals}};
}

inline PlanReport plan_report_from_json(const nlohmann::json& j) {
  try {
    PlanReport r;
    r.slum_id = j.value("slum", "");
    r.planner_id = j.value("planner", "");
    r.budget_mode = j.value("budget_mode", "segment_count") == "construction_cost" ? BudgetMode::kConstructionCost
                                                                                   : BudgetMode::kSegmentCount;
    r.budget = j.value("budget", 0.0);
    r.faces = j.value("faces", 0);
    r.connected_at_reset = j.value("connected_at_reset", 0);
    for (const auto& s : j.at("steps")) {
      PlanStep p;
      p.step = s.at("step").get<int>();
      p.edge = s.at("edge").get<EdgeId>();
      p.stage = s.value("stage", "I") == "II" ? Stage::kShorten : Stage::kConnect;
      p.reward = s.value("reward", 0.0);
      p.cumulative_sc = s.value("cumulative_sc", 0.0);
      p.connected = s.value("connected", 0);
      r.steps.push_back(p);
    }
    const auto& f = j.at("finals");
    if (!f.at("NR").is_null()) r.nr = f.at("NR").get<int>();
    r.ad = f.value("AD_value", 0.0);
    r.sc = f.value("SC", 0.0);
    r.universal = f.value("universal_connectivity", false);
    r.total_reward = f.value("total_reward", 0.0);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed plan report: ") + e.what());
  }
}

/// Internal-consistency problems of a report (empty when consistent).
inline std::vector<std::string> report_violations(const PlanReport& r) {
  std::vector<std::string> out;
  double sc = 0.0;
  int connected = r.connected_at_reset;
  std::optional<int> nr = r.connected_at_reset == r.faces ? std::optional<int>(0) : std::nullopt;
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    const PlanStep& s = r.steps[i];
    if (s.step != static_cast<int>(i) + 1) out.push_back("step numbering broken at " + std::to_string(i));
    if (s.cumulative_sc + 1e-12 < sc) out.push_back("cumulative SC decreases at step " + std::to_string(s.step));
    if (s.connected < connected) out.push_back("connected count decreases at step " + std::to_string(s.step));
    sc = s.cumulative_sc;
    connected = s.connected;
    if (!nr && connected == r.faces) nr = s.step;
  }
  if (std::abs(sc - r.sc) > 1e-9 * std::max(1.0, std::abs(r.sc))) out.push_back("final SC disagrees with steps");
  if (nr != r.nr) out.push_back("final NR disagrees with steps");
  if (r.universal != (connected == r.faces)) out.push_back("universal flag disagrees with steps");
  return out;
}

/// Chooses the next edge given the environment; must respect the mask.
using EdgeChooser = std::function<EdgeId(const Environment&)>;

/// Plays one episode to termination and records it.
inline PlanReport run_episode(Environment& env, const EdgeChooser& choose, const std::string& planner_id) {
  PlanReport r;
  r.slum_id = env.context().id;
  r.planner_id = planner_id;
  r.budget_mode = env.config().budget_mode;
  r.budget = env.budget();
  r.faces = static_cast<int>(env.context().graph.faces.size());
  r.connected_at_reset = static_cast<int>(env.state().connected_count());
  while (!env.done()) {
    const EdgeId e = choose(env);
    if (e < 0) break;  // planner stops early and leaves budget unspent
    const Stage stage = env.stage();
    const StepOutcome o = env.step(e);
    PlanStep s;
    s.step = env.steps();
    s.edge = e;
    s.stage = stage;
    s.reward = o.reward;
    s.cumulative_sc = env.spent();
    s.connected = static_cast<int>(env.state().connected_count());
    r.total_reward += o.reward;
    r.steps.push_back(s);
  }
  const Metrics m = env.state().metrics();
  r.nr = m.nr;
  r.ad = m.ad;
  r.sc = m.sc;
  r.universal = m.universal;
  return r;
}

}  // namespace slumroad
