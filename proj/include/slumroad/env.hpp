#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "slumroad/errors.hpp"
#include "slumroad/slum_state.hpp"

namespace slumroad {

enum class Stage { kConnect, kShorten };  // stage I: reach every place; stage II: cut travel distance

inline const char* to_string(Stage s) { return s == Stage::kConnect ? "I" : "II"; }

enum class BudgetMode { kSegmentCount, kConstructionCost };
enum class DNormalization { kMeanPairs, kSumTimesPairs };
enum class Masking { kStaged, kTrivial };  // kTrivial: any edge that is not yet a road

using Mask = std::vector<std::uint8_t>;

struct EnvConfig {
  BudgetMode budget_mode = BudgetMode::kSegmentCount;
  std::optional<double> budget;  // segments or cost; defaults to budget_fraction of the candidates
  double budget_fraction = 0.5;
  double alpha1 = 1.0;
  double alpha2 = -0.5;
  bool relax_deadlock = true;
  DNormalization d_normalization = DNormalization::kMeanPairs;
  Masking masking = Masking::kStaged;
};

struct StepOutcome {
  double reward = 0.0;
  bool done = false;
  Stage stage = Stage::kConnect;  // stage after the step
  Stage acted_in = Stage::kConnect;
  int newly_connected = 0;        // faces that actually became connected
  int far_unconnected = 0;        // the stage-I count term (unconnected faces at the far endpoint)
  double d_value = 0.0;           // D after the step
  double distance_term = 0.0;     // alpha1 * (D(k) - D(k+1)) for stage-II steps, else 0
};

/// Budget resolved against a concrete slum.
inline double resolve_budget(const EnvConfig& cfg, const SlumContext& ctx) {
  if (cfg.budget) return *cfg.budget;
  if (cfg.budget_mode == BudgetMode::kSegmentCount)
    return std::max(1.0, std::floor(cfg.budget_fraction * static_cast<double>(ctx.candidates.size())));
  return cfg.budget_fraction * ctx.graph.total_candidate_cost();
}

/// Pairwise place distance D(k). The default averages over pairs; the
/// sum_times_pairs variant multiplies the sum by |F|(|F|-1)/2.
inline double pairwise_mean_distance(const SlumGraph& s, DNormalization mode) {
  const auto nf = static_cast<double>(s.graph().faces.size());
  if (nf < 2) return 0.0;
  const double pairs = 0.5 * nf * (nf - 1.0);
  const double mean = s.average_face_distance();
  return mode == DNormalization::kMeanPairs ? mean : mean * pairs * pairs;
}

/// The two-stage planning MDP over one slum.
class Environment {
 public:
  Environment(std::shared_ptr<const SlumContext> ctx, EnvConfig cfg)
      : ctx_(std::move(ctx)), cfg_(cfg), state_(ctx_) {
    validate_config();
    budget_ = resolve_budget(cfg_, *ctx_);
    reset();
  }

  void reset() {
    state_ = SlumGraph(ctx_);
    stage_ = state_.universally_connected() ? Stage::kShorten : Stage::kConnect;
    steps_ = 0;
    d_ = pairwise_mean_distance(state_, cfg_.d_normalization);
    mask_.reset();
    done_ = false;
    done_ = compute_done();
  }

  const SlumGraph& state() const { return state_; }
  const SlumContext& context() const { return *ctx_; }
  std::shared_ptr<const SlumContext> context_ptr() const { return ctx_; }
  const EnvConfig& config() const { return cfg_; }
  Stage stage() const { return stage_; }
  int steps() const { return steps_; }
  double budget() const { return budget_; }
  double spent() const { return state_.planned_cost(); }
  double remaining_budget() const {
    return cfg_.budget_mode == BudgetMode::kSegmentCount ? budget_ - steps_ : budget_ - spent();
  }
  double current_d() const { return d_; }
  bool done() const { return done_; }

  /// Edges selectable now. Throws DeadlockError when stage I has no legal
  /// edge and relax_deadlock is off.
  const Mask& action_mask() const {
    if (!mask_) mask_ = compute_mask();
    return *mask_;
  }

  StepOutcome step(EdgeId e) {
    if (done_) throw InvalidAction("episode is over");
    const Mask& m = action_mask();
    if (e < 0 || static_cast<std::size_t>(e) >= m.size() || !m[e])
      throw InvalidAction("edge " + std::to_string(e) + " is not allowed by the current mask");

    StepOutcome out;
    out.acted_in = stage_;
    const Edge& ed = ctx_->graph.edges[e];
    out.far_unconnected = far_endpoint_count(e);
    const auto before = static_cast<int>(state_.connected_count());
    state_.set_road(e);
    ++steps_;
    out.newly_connected = static_cast<int>(state_.connected_count()) - before;

    const double d_next = pairwise_mean_distance(state_, cfg_.d_normalization);
    if (stage_ == Stage::kConnect) {
      out.reward = cfg_.alpha1 * out.far_unconnected + cfg_.alpha2 * ed.cost;
    } else {
      out.distance_term = cfg_.alpha1 * (d_ - d_next);
      out.reward = out.distance_term + cfg_.alpha2 * ed.cost;
    }
    d_ = d_next;
    if (stage_ == Stage::kConnect && state_.universally_connected()) stage_ = Stage::kShorten;
    mask_.reset();
    done_ = compute_done();
    out.done = done_;
    out.stage = stage_;
    out.d_value = d_;
    return out;
  }

  /// Unconnected faces at the far endpoint, maximised over the orientations
  /// that start on the road network (both orientations if neither does).
  int far_endpoint_count(EdgeId e) const {
    const Edge& ed = ctx_->graph.edges[e];
    const bool a_road = state_.on_road(ed.a), b_road = state_.on_road(ed.b);
    const int via_b = state_.unconnected_faces_at(ed.b);  // start at a, far end b
    const int via_a = state_.unconnected_faces_at(ed.a);
    if (a_road && !b_road) return via_b;
    if (b_road && !a_road) return via_a;
    return std::max(via_a, via_b);
  }

 private:
  void validate_config() const {
    if (!(cfg_.alpha1 > 0.0)) throw ConfigError("alpha1 must be positive");
    if (cfg_.alpha2 > 0.0) throw ConfigError("alpha2 must be <= 0");
    const double b = resolve_budget(cfg_, *ctx_);
    if (!(b > 0.0)) throw ConfigError("budget must be positive");
    if (cfg_.budget_mode == BudgetMode::kSegmentCount) {
      if (b != std::floor(b)) throw ConfigError("segment budget must be an integer");
      if (b > static_cast<double>(ctx_->candidates.size()))
        throw ConfigError("budget exceeds the number of candidate segments");
    } else if (b > ctx_->graph.total_candidate_cost() * (1.0 + 1e-12)) {
      throw ConfigError("budget exceeds the total candidate cost");
    }
  }

  Mask staged_connect_mask() const {
    const PlanarGraph& g = ctx_->graph;
    Mask m(g.edges.size(), 0);
    for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) {
      if (state_.road(e)) continue;
      const Edge& ed = g.edges[e];
      const bool ab = state_.on_road(ed.a) && state_.unconnected_faces_at(ed.b) > 0;
      const bool ba = state_.on_road(ed.b) && state_.unconnected_faces_at(ed.a) > 0;
      m[e] = (ab || ba) ? 1 : 0;
    }
    return m;
  }

  Mask touching_mask() const {
    const PlanarGraph& g = ctx_->graph;
    Mask m(g.edges.size(), 0);
    for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) {
      const Edge& ed = g.edges[e];
      m[e] = (!state_.road(e) && (state_.on_road(ed.a) || state_.on_road(ed.b))) ? 1 : 0;
    }
    return m;
  }

  Mask compute_mask() const {
    const PlanarGraph& g = ctx_->graph;
    Mask m;
    if (cfg_.masking == Masking::kTrivial) {
      m.assign(g.edges.size(), 0);
      for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) m[e] = state_.road(e) ? 0 : 1;
    } else if (stage_ == Stage::kConnect) {
      m = staged_connect_mask();
      if (std::find(m.begin(), m.end(), 1) == m.end()) {
        if (!cfg_.relax_deadlock)
          throw DeadlockError("no edge extends the road network to an unconnected place");
        m = touching_mask();
      }
    } else {
      m = touching_mask();
    }
    if (cfg_.budget_mode == BudgetMode::kConstructionCost) {
      const double left = budget_ - spent();
      for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e)
        if (m[e] && g.edges[e].cost > left * (1.0 + 1e-12)) m[e] = 0;
    }
    return m;
  }

  bool compute_done() const {
    if (cfg_.budget_mode == BudgetMode::kSegmentCount && steps_ >= static_cast<int>(budget_)) return true;
    const Mask& m = action_mask();
    return std::find(m.begin(), m.end(), 1) == m.end();
  }

  std::shared_ptr<const SlumContext> ctx_;
  EnvConfig cfg_;
  SlumGraph state_;
  Stage stage_ = Stage::kConnect;
  int steps_ = 0;
  double budget_ = 0.0;
  double d_ = 0.0;
  bool done_ = false;
  mutable std::optional<Mask> mask_;
};

}  // namespace slumroad
