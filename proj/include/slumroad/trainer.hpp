#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/env.hpp"
#include "slumroad/errors.hpp"
#include "slumroad/neural.hpp"
#include "slumroad/plan_report.hpp"

namespace slumroad {

struct TrainConfig {
  double gamma = 0.995;
  double tau = 0.0;  // generalised-advantage lambda
  double clip_eps = 0.2;
  double entropy_beta = 0.01;
  double value_coef = 0.5;
  double learning_rate = 4e-4;
  double weight_decay = 0.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t episodes_per_iter = 64;
  std::size_t epochs_per_iter = 4;
  std::size_t minibatch_size = 512;
  std::size_t max_iterations = 100;
  bool normalize_advantages = true;
  bool early_stop = false;  // stop on a reward plateau
  std::size_t plateau_window = 10;
  double plateau_tolerance = 0.01;
  std::uint64_t seed = 1;
};

inline void validate(const TrainConfig& c) {
  if (!(c.gamma > 0.0 && c.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (!(c.clip_eps > 0.0)) throw ConfigError("clip_eps must be positive");
  if (c.tau < 0.0 || c.tau > 1.0) throw ConfigError("tau must lie in [0, 1]");
  if (c.episodes_per_iter == 0 || c.epochs_per_iter == 0 || c.minibatch_size == 0)
    throw ConfigError("episodes, epochs and minibatch size must be positive");
}

/// Optional rewrite of the features the policy sees (feature-zeroing ablations).
using FeatureTransform = std::function<void(FeatureSet&)>;

struct Transition {
  FeatureSet features;
  Mask mask;
  EdgeId action = -1;
  double log_prob = 0.0;
  double reward = 0.0;
  double value = 0.0;
  Stage stage = Stage::kConnect;
  bool done = false;
};

struct Trajectory {
  std::vector<Transition> steps;
  double episode_reward = 0.0;
  Metrics final;
};

class Adam {
 public:
  Adam(const Params& shape, const TrainConfig& cfg)
      : m_(zeros_like(shape)), v_(zeros_like(shape)), lr_(cfg.learning_rate), b1_(cfg.adam_beta1),
        b2_(cfg.adam_beta2), eps_(cfg.adam_eps), wd_(cfg.weight_decay) {}

  void step(Params& p, const Params& g) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
    std::vector<Matrix*> ps, ms, vs;
    std::vector<const Matrix*> gs;
    p.for_each([&](const std::string&, Matrix& x) { ps.push_back(&x); });
    m_.for_each([&](const std::string&, Matrix& x) { ms.push_back(&x); });
    v_.for_each([&](const std::string&, Matrix& x) { vs.push_back(&x); });
    g.for_each([&](const std::string&, const Matrix& x) { gs.push_back(&x); });
    for (std::size_t i = 0; i < ps.size(); ++i) {
      auto& pv = ps[i]->values();
      auto& mv = ms[i]->values();
      auto& vv = vs[i]->values();
      const auto& gv = gs[i]->values();
      for (std::size_t k = 0; k < pv.size(); ++k) {
        const double grad = gv[k] + wd_ * pv[k];
        mv[k] = b1_ * mv[k] + (1.0 - b1_) * grad;
        vv[k] = b2_ * vv[k] + (1.0 - b2_) * grad * grad;
        pv[k] -= lr_ * (mv[k] / c1) / (std::sqrt(vv[k] / c2) + eps_);
      }
    }
  }

 private:
  Params m_, v_;
  double lr_, b1_, b2_, eps_, wd_;
  long t_ = 0;
};

namespace detail {

inline std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

inline std::size_t sample_index(const std::vector<double>& probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  std::size_t last = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (r < acc) return i;
  }
  return last;  // rounding slack lands on the last positive entry
}

}  // namespace detail

/// Draws an edge from the masked policy distribution.
inline EdgeId sample_action(std::span<const double> scores, const Mask& mask, std::mt19937_64& rng) {
  return static_cast<EdgeId>(detail::sample_index(masked_distribution(scores, mask), rng));
}

/// Plays `cfg.episodes_per_iter` sampled episodes. Episode k of iteration i
/// uses its own RNG stream, so results depend only on (seed, i, k).
inline std::vector<Trajectory> collect_rollouts(const Environment& prototype, const Params& params,
                                                const TrainConfig& cfg, std::uint64_t iteration,
                                                const FeatureTransform& transform = {}) {
  const Topology topo = make_topology(prototype.context().graph);
  std::vector<Trajectory> out;
  out.reserve(cfg.episodes_per_iter);
  for (std::size_t ep = 0; ep < cfg.episodes_per_iter; ++ep) {
    auto rng = detail::stream_rng(cfg.seed, iteration, ep);
    Environment env = prototype;
    env.reset();
    Trajectory traj;
    while (!env.done()) {
      Transition t;
      t.features = env.state().features();
      if (transform) transform(t.features);
      t.stage = env.stage();
      t.mask = env.action_mask();
      const ForwardPass fp = forward(params, topo, t.features, t.stage);
      t.action = sample_action(fp.scores, t.mask, rng);
      t.log_prob = log_prob(fp.scores, t.mask, static_cast<std::size_t>(t.action));
      t.value = fp.value;
      const StepOutcome o = env.step(t.action);
      t.reward = o.reward;
      t.done = o.done;
      traj.episode_reward += o.reward;
      traj.steps.push_back(std::move(t));
    }
    traj.final = env.state().metrics();
    out.push_back(std::move(traj));
  }
  return out;
}

struct AdvantageTarget {
  double advantage = 0.0;
  double target = 0.0;  // return target R_t = A_t + V(s_t)
};

/// Generalised advantage estimation with terminal bootstrap 0.
inline std::vector<AdvantageTarget> advantages(const Trajectory& traj, double gamma, double tau) {
  const std::size_t n = traj.steps.size();
  std::vector<AdvantageTarget> out(n);
  double running = 0.0;
  for (std::size_t i = n; i-- > 0;) {
    const Transition& t = traj.steps[i];
    const double next_value = (t.done || i + 1 == n) ? 0.0 : traj.steps[i + 1].value;
    const double delta = t.reward + gamma * next_value - t.value;
    running = delta + ((t.done || i + 1 == n) ? 0.0 : gamma * tau * running);
    out[i] = {running, running + t.value};
  }
  return out;
}

struct Sample {
  const Transition* transition = nullptr;
  double advantage = 0.0;
  double target = 0.0;
};

struct LossParts {
  double policy = 0.0;   // mean clipped surrogate (the maximised quantity)
  double entropy = 0.0;  // mean entropy
  double value = 0.0;    // mean squared value error
  double total = 0.0;    // -policy - beta * entropy + c * value
  double clip_fraction = 0.0;
  double mean_ratio = 0.0;
  std::vector<double> ratios;
};

/// PPO loss of one minibatch and, if `grads` is given, its gradient.
inline LossParts ppo_loss(std::span<const Sample> batch, const Params& params, const Topology& topo,
                          const TrainConfig& cfg, Params* grads) {
  LossParts lp;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  std::vector<double> dscores;
  for (const Sample& s : batch) {
    const Transition& t = *s.transition;
    const ForwardPass fp = forward(params, topo, t.features, t.stage);
    const std::vector<double> probs = masked_distribution(fp.scores, t.mask);
    const auto a = static_cast<std::size_t>(t.action);
    const double logp = log_prob(fp.scores, t.mask, a);
    const double ratio = std::exp(logp - t.log_prob);
    const double clipped = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps);
    const double unclipped_obj = ratio * s.advantage;
    const double clipped_obj = clipped * s.advantage;
    const bool use_unclipped = unclipped_obj <= clipped_obj;
    const double obj = use_unclipped ? unclipped_obj : clipped_obj;
    const double h = entropy(probs);
    const double verr = fp.value - s.target;

    lp.policy += obj * inv_b;
    lp.entropy += h * inv_b;
    lp.value += verr * verr * inv_b;
    lp.mean_ratio += ratio * inv_b;
    if (ratio != clipped) lp.clip_fraction += inv_b;
    lp.ratios.push_back(ratio);

    if (!grads) continue;
    const double dobj_dlogp = use_unclipped ? ratio * s.advantage : 0.0;
    dscores.assign(fp.scores.size(), 0.0);
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (!t.mask[k]) continue;
      const double pk = probs[k];
      const double dlogp = (k == a ? 1.0 : 0.0) - pk;
      const double dh = pk > 0.0 ? -pk * (std::log(pk) + h) : 0.0;
      dscores[k] = (-dobj_dlogp * dlogp - cfg.entropy_beta * dh) * inv_b;
    }
    const double dvalue = 2.0 * cfg.value_coef * verr * inv_b;
    backward(params, topo, fp, dscores, dvalue, *grads);
  }
  lp.total = -lp.policy - cfg.entropy_beta * lp.entropy + cfg.value_coef * lp.value;
  if (!std::isfinite(lp.total)) throw NumericalError("non-finite PPO loss");
  return lp;
}

struct UpdateReport {
  double policy = 0.0;
  double entropy = 0.0;
  double value = 0.0;
  double total = 0.0;
  double clip_fraction = 0.0;
  std::size_t minibatches = 0;
};

/// Builds the sample buffer (with optional advantage normalisation).
inline std::vector<Sample> make_samples(const std::vector<Trajectory>& trajs, const TrainConfig& cfg) {
  std::vector<Sample> out;
  for (const Trajectory& tr : trajs) {
    const auto adv = advantages(tr, cfg.gamma, cfg.tau);
    for (std::size_t i = 0; i < tr.steps.size(); ++i) out.push_back({&tr.steps[i], adv[i].advantage, adv[i].target});
  }
  if (cfg.normalize_advantages && !out.empty()) {
    double mean = 0.0;
    for (const Sample& s : out) mean += s.advantage;
    mean /= static_cast<double>(out.size());
    double var = 0.0;
    for (const Sample& s : out) var += (s.advantage - mean) * (s.advantage - mean);
    const double sd = std::sqrt(var / static_cast<double>(out.size()));
    for (Sample& s : out) s.advantage = sd > 1e-12 ? (s.advantage - mean) / sd : s.advantage - mean;
  }
  return out;
}

/// epochs_per_iter passes of shuffled minibatches, one Adam step each.
inline UpdateReport ppo_update(std::vector<Sample> buffer, Params& params, Adam& adam, const Topology& topo,
                               const TrainConfig& cfg, std::mt19937_64& rng) {
  if (buffer.empty()) throw StateError("empty rollout buffer");
  UpdateReport rep;
  Params grads = zeros_like(params);
  for (std::size_t epoch = 0; epoch < cfg.epochs_per_iter; ++epoch) {
    std::shuffle(buffer.begin(), buffer.end(), rng);
    for (std::size_t start = 0; start < buffer.size(); start += cfg.minibatch_size) {
      const std::size_t len = std::min(cfg.minibatch_size, buffer.size() - start);
      grads.for_each([](const std::string&, Matrix& m) { m.fill(0.0); });
      const LossParts lp = ppo_loss(std::span<const Sample>(buffer.data() + start, len), params, topo, cfg, &grads);
      adam.step(params, grads);
      rep.policy += lp.policy;
      rep.entropy += lp.entropy;
      rep.value += lp.value;
      rep.total += lp.total;
      rep.clip_fraction += lp.clip_fraction;
      ++rep.minibatches;
    }
  }
  const double inv = 1.0 / static_cast<double>(rep.minibatches);
  rep.policy *= inv;
  rep.entropy *= inv;
  rep.value *= inv;
  rep.total *= inv;
  rep.clip_fraction *= inv;
  return rep;
}

/// Deterministic greedy rollout: argmax of the masked distribution, ties to
/// the lowest edge id.
inline PlanReport infer_plan(const std::shared_ptr<const SlumContext>& ctx, const EnvConfig& env_cfg,
                             const Params& params, const FeatureTransform& transform = {},
                             const std::string& planner_id = "drl-gnn") {
  const Topology topo = make_topology(ctx->graph);
  Environment env(ctx, env_cfg);
  return run_episode(
      env,
      [&](const Environment& e) {
        FeatureSet fs = e.state().features();
        if (transform) transform(fs);
        const ForwardPass fp = forward(params, topo, fs, e.stage());
        return greedy_action(fp.scores, e.action_mask());
      },
      planner_id);
}

struct IterationRecord {
  std::size_t iteration = 0;
  double mean_episode_reward = 0.0;
  double greedy_reward = 0.0;
  std::optional<int> greedy_nr;
  double greedy_ad = 0.0;
  double greedy_sc = 0.0;
  bool greedy_universal = false;
  UpdateReport losses;
  double seconds = 0.0;
};

inline nlohmann::json to_json(const IterationRecord& r) {
  return {{"iteration", r.iteration},
          {"mean_episode_reward", r.mean_episode_reward},
          {"greedy_reward", r.greedy_reward},
          {"greedy_NR", r.greedy_nr ? nlohmann::json(*r.greedy_nr) : nlohmann::json(nullptr)},
          {"greedy_AD", r.greedy_ad},
          {"greedy_SC", r.greedy_sc},
          {"greedy_universal", r.greedy_universal},
          {"loss_policy", r.losses.policy},
          {"loss_entropy", r.losses.entropy},
          {"loss_value", r.losses.value},
          {"loss_total", r.losses.total},
          {"clip_fraction", r.losses.clip_fraction}};
}

struct TrainResult {
  Params best;  // by greedy-evaluation reward
  Params last;
  std::size_t best_iteration = 0;  // 0: the initial parameters
  std::vector<IterationRecord> records;
};

/// Relative change of the mean episodic reward over the plateau window.
inline bool reached_plateau(const std::vector<IterationRecord>& recs, const TrainConfig& cfg) {
  if (recs.size() <= cfg.plateau_window) return false;
  const double now = recs.back().mean_episode_reward;
  const double then = recs[recs.size() - 1 - cfg.plateau_window].mean_episode_reward;
  return std::abs(now - then) < cfg.plateau_tolerance * std::max(std::abs(then), 1e-12);
}

/// Collect -> advantages -> clipped update, once per iteration.
inline TrainResult train(const std::shared_ptr<const SlumContext>& ctx, const EnvConfig& env_cfg,
                         const TrainConfig& cfg, const ModelConfig& model,
                         const std::function<void(const IterationRecord&)>& on_record = {},
                         const FeatureTransform& transform = {}) {
  validate(cfg);
  TrainResult res;
  res.last = init_params(model, cfg.seed);
  res.best = res.last;
  if (cfg.max_iterations == 0) return res;

  const Environment prototype(ctx, env_cfg);
  const Topology topo = make_topology(ctx->graph);
  Adam adam(res.last, cfg);
  auto update_rng = detail::stream_rng(cfg.seed, 0xC0FFEE, 0);
  double best_reward = infer_plan(ctx, env_cfg, res.best, transform).total_reward;

  for (std::size_t it = 1; it <= cfg.max_iterations; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto trajs = collect_rollouts(prototype, res.last, cfg, it, transform);
    IterationRecord rec;
    rec.iteration = it;
    for (const auto& tr : trajs) rec.mean_episode_reward += tr.episode_reward;
    rec.mean_episode_reward /= static_cast<double>(trajs.size());
    rec.losses = ppo_update(make_samples(trajs, cfg), res.last, adam, topo, cfg, update_rng);

    const PlanReport greedy = infer_plan(ctx, env_cfg, res.last, transform);
    rec.greedy_reward = greedy.total_reward;
    rec.greedy_nr = greedy.nr;
    rec.greedy_ad = greedy.ad;
    rec.greedy_sc = greedy.sc;
    rec.greedy_universal = greedy.universal;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (greedy.total_reward > best_reward) {
      best_reward = greedy.total_reward;
      res.best = res.last;
      res.best_iteration = it;
    }
    res.records.push_back(rec);
    if (on_record) on_record(rec);
    if (cfg.early_stop && reached_plateau(res.records, cfg)) break;
  }
  return res;
}

}  // namespace slumroad
