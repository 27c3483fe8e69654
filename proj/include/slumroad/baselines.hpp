#pragma once

#include <algorithm>
#include <array>
#include <iterator>
#include <optional>
#include <queue>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "slumroad/env.hpp"
#include "slumroad/errors.hpp"
#include "slumroad/plan_report.hpp"

namespace slumroad {

enum class BaselineKind { kRandom, kGreedyA, kGreedyC, kMst, kGaGenerative, kGaSwap, kHsMc };

inline const char* to_string(BaselineKind k) {
  switch (k) {
    case BaselineKind::kRandom: return "random";
    case BaselineKind::kGreedyA: return "greedy_a";
    case BaselineKind::kGreedyC: return "greedy_c";
    case BaselineKind::kMst: return "mst";
    case BaselineKind::kGaGenerative: return "ga_generative";
    case BaselineKind::kGaSwap: return "ga_swap";
    case BaselineKind::kHsMc: return "hs_mc";
  }
  return "?";
}

inline BaselineKind baseline_kind_from_string(const std::string& s) {
  for (auto k : {BaselineKind::kRandom, BaselineKind::kGreedyA, BaselineKind::kGreedyC, BaselineKind::kMst,
                 BaselineKind::kGaGenerative, BaselineKind::kGaSwap, BaselineKind::kHsMc})
    if (s == to_string(k)) return k;
  throw UnknownVariant("unknown baseline kind: " + s);
}

struct GaParams {
  std::size_t population = 50;
  std::size_t generations = 200;
  double mutation_rate = 0.1;
  double mutation_sigma = 0.5;  // generative genes only
  std::size_t tournament = 3;
  std::size_t elitism = 1;
  double w_nr = 10.0;
  double w_ad = 1.0;
  double w_sc = 1.0;
};

struct BaselineSpec {
  BaselineKind kind = BaselineKind::kRandom;
  bool masked = true;
  std::uint64_t seed = 1;
  GaParams ga;
  std::size_t hs_samples = 100;
};

inline std::string planner_id(const BaselineSpec& s) {
  std::string id = to_string(s.kind);
  const bool whole_plan = s.kind == BaselineKind::kGaSwap || s.kind == BaselineKind::kHsMc;
  if (!whole_plan) id += s.masked ? "(masked)" : "(unmasked)";
  return id;
}

namespace detail {

inline EdgeId first_allowed(const Mask& m) {
  for (std::size_t e = 0; e < m.size(); ++e)
    if (m[e]) return static_cast<EdgeId>(e);
  throw EmptyMaskError("no selectable edge");
}

/// Argmax of `score` over the mask; ties go to the lowest id.
template <class Score>
EdgeId argmax_allowed(const Mask& m, Score&& score) {
  EdgeId best = -1;
  double best_score = 0.0;
  for (std::size_t e = 0; e < m.size(); ++e) {
    if (!m[e]) continue;
    const double s = score(static_cast<EdgeId>(e));
    if (best < 0 || s > best_score) {
      best = static_cast<EdgeId>(e);
      best_score = s;
    }
  }
  if (best < 0) throw EmptyMaskError("no selectable edge");
  return best;
}

inline EnvConfig with_masking(EnvConfig cfg, bool masked) {
  cfg.masking = masked ? Masking::kStaged : Masking::kTrivial;
  return cfg;
}

/// True when the road edges (exterior included) form one connected piece.
inline bool roads_connected(const SlumGraph& s) {
  const PlanarGraph& g = s.graph();
  std::vector<char> seen(g.nodes.size(), 0);
  NodeId start = -1;
  std::size_t road_nodes = 0;
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v)
    if (s.on_road(v)) {
      ++road_nodes;
      if (start < 0) start = v;
    }
  if (start < 0) return true;
  std::vector<NodeId> stack{start};
  seen[start] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (EdgeId e : g.node_edges[v]) {
      if (!s.road(e)) continue;
      const NodeId w = g.edges[e].other(v);
      if (!seen[w]) {
        seen[w] = 1;
        ++reached;
        stack.push_back(w);
      }
    }
  }
  return reached == road_nodes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-step rules

/// Uniform random scores; the argmax over the mask is a uniform draw.
inline EdgeId random_choice(const Environment& env, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Mask& m = env.action_mask();
  std::vector<double> scores(m.size());
  for (double& s : scores) s = u(rng);
  return detail::argmax_allowed(m, [&](EdgeId e) { return scores[e]; });
}

/// Minimum construction cost.
inline EdgeId greedy_c_choice(const Environment& env) {
  const PlanarGraph& g = env.context().graph;
  return detail::argmax_allowed(env.action_mask(), [&](EdgeId e) { return -g.edges[e].cost; });
}

/// Most unconnected places at the far endpoint; random once everything is connected.
inline EdgeId greedy_a_choice(const Environment& env, std::mt19937_64& rng) {
  if (env.stage() == Stage::kShorten) return random_choice(env, rng);
  return detail::argmax_allowed(env.action_mask(), [&](EdgeId e) { return env.far_endpoint_count(e); });
}

// ---------------------------------------------------------------------------
// Minimum spanning tree over places

/// Places plus a virtual root (index = number of faces) standing for the
/// existing road network.
struct PlaceGraph {
  struct Link {
    int u = 0;
    int v = 0;
    double weight = 0.0;
    EdgeId segment = -1;  // -1: a place already on the road network
  };
  int vertices = 0;
  std::vector<Link> links;
};

inline PlaceGraph place_graph(const SlumGraph& s) {
  const PlanarGraph& g = s.graph();
  PlaceGraph pg;
  const int root = static_cast<int>(g.faces.size());
  pg.vertices = root + 1;
  for (FaceId f = 0; f < root; ++f)
    if (s.connected(f)) pg.links.push_back({f, root, 0.0, -1});
  for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) {
    if (s.road(e)) continue;
    const auto& fs = g.edge_faces[e];
    if (fs.size() == 2) pg.links.push_back({fs[0], fs[1], g.edges[e].cost, e});
    else if (fs.size() == 1) pg.links.push_back({fs[0], root, g.edges[e].cost, e});
  }
  return pg;
}

/// Kruskal; returns accepted link indices in acceptance order.
inline std::vector<std::size_t> kruskal(const PlaceGraph& pg) {
  std::vector<std::size_t> order(pg.links.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pg.links[a].weight < pg.links[b].weight; });
  detail::UnionFind uf(static_cast<std::size_t>(pg.vertices));
  std::vector<std::size_t> out;
  for (std::size_t i : order)
    if (uf.unite(pg.links[i].u, pg.links[i].v)) out.push_back(i);
  if (static_cast<int>(out.size()) + 1 != pg.vertices) throw DisconnectedError("some place is unreachable in the place graph");
  return out;
}

/// Candidate segments of the spanning tree, in acceptance order.
inline std::vector<EdgeId> mst_segments(const SlumGraph& s) {
  const PlaceGraph pg = place_graph(s);
  std::vector<EdgeId> out;
  for (std::size_t i : kruskal(pg))
    if (pg.links[i].segment >= 0) out.push_back(pg.links[i].segment);
  return out;
}

/// Builds the earliest tree segment the mask allows, else the cheapest
/// allowed edge; stops once every tree segment is built.
inline PlanReport mst_plan(Environment& env, const std::string& id) {
  env.reset();
  std::vector<EdgeId> pending = mst_segments(env.state());
  return run_episode(
      env,
      [&](const Environment& e) -> EdgeId {
        std::erase_if(pending, [&](EdgeId x) { return e.state().road(x); });
        if (pending.empty()) return -1;
        const Mask& m = e.action_mask();
        for (EdgeId x : pending)
          if (m[x]) return x;
        return greedy_c_choice(e);
      },
      id);
}

// ---------------------------------------------------------------------------
// Genetic algorithms

template <class Genome>
struct Individual {
  Genome genome;
  double fitness = 0.0;
};

template <class Genome>
struct GaOutcome {
  Individual<Genome> best;
  std::vector<double> best_per_generation;
};

/// One generation: elites carried over, the rest bred from tournament
/// winners. The returned population is sorted by descending fitness.
template <class Genome, class Fitness, class Crossover, class Mutate>
std::vector<Individual<Genome>> next_generation(const std::vector<Individual<Genome>>& pop, const GaParams& p,
                                                std::mt19937_64& rng, Fitness&& fitness, Crossover&& crossover,
                                                Mutate&& mutate) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  auto tournament = [&]() -> const Individual<Genome>& {
    std::size_t best = pick(rng);
    for (std::size_t i = 1; i < p.tournament; ++i) {
      const std::size_t c = pick(rng);
      if (pop[c].fitness > pop[best].fitness) best = c;
    }
    return pop[best];
  };
  std::vector<Individual<Genome>> next(pop.begin(), pop.begin() + static_cast<std::ptrdiff_t>(std::min(p.elitism, pop.size())));
  while (next.size() < pop.size()) {
    Genome child = crossover(tournament().genome, tournament().genome, rng);
    mutate(child, rng);
    const double f = fitness(child);
    next.push_back({std::move(child), f});
  }
  std::stable_sort(next.begin(), next.end(), [](const auto& a, const auto& b) { return a.fitness > b.fitness; });
  return next;
}

template <class Genome, class Fitness, class Init, class Crossover, class Mutate>
GaOutcome<Genome> run_ga(const GaParams& p, std::mt19937_64& rng, Fitness&& fitness, Init&& init, Crossover&& crossover,
                         Mutate&& mutate) {
  if (p.population == 0) throw ConfigError("GA population must be positive");
  std::vector<Individual<Genome>> pop;
  for (std::size_t i = 0; i < p.population; ++i) {
    Genome g = init(rng);
    const double f = fitness(g);
    pop.push_back({std::move(g), f});
  }
  std::stable_sort(pop.begin(), pop.end(), [](const auto& a, const auto& b) { return a.fitness > b.fitness; });
  GaOutcome<Genome> out;
  out.best_per_generation.push_back(pop.front().fitness);
  for (std::size_t gen = 0; gen < p.generations; ++gen) {
    pop = next_generation(pop, p, rng, fitness, crossover, mutate);
    out.best_per_generation.push_back(pop.front().fitness);
  }
  out.best = pop.front();
  return out;
}

/// Negative weighted sum of normalised NR surrogate, AD and SC.
inline double plan_fitness(const PlanReport& r, const SlumContext& ctx, const GaParams& p) {
  const double candidates = std::max<double>(1.0, static_cast<double>(ctx.candidates.size()));
  const int unconnected = r.faces - (r.steps.empty() ? r.connected_at_reset : r.steps.back().connected);
  const double nr = r.nr ? *r.nr : static_cast<double>(r.steps.size() + static_cast<std::size_t>(unconnected));
  const double total_cost = std::max(ctx.graph.total_candidate_cost(), 1e-12);
  return -(p.w_nr * nr / candidates + p.w_ad * r.ad / ctx.sentinel + p.w_sc * r.sc / total_cost);
}

using GenerativeGene = std::array<double, feature::kEdgeDim>;

/// Greedy rollout scoring each edge by <gene, edge features>.
inline PlanReport ga_generative_plan(Environment& env, const GenerativeGene& gene, const std::string& id) {
  env.reset();
  return run_episode(
      env,
      [&](const Environment& e) {
        const FeatureSet fs = e.state().features();
        return detail::argmax_allowed(e.action_mask(), [&](EdgeId x) {
          double s = 0.0;
          for (std::size_t k = 0; k < gene.size(); ++k) s += gene[k] * fs.edge(static_cast<std::size_t>(x), k);
          return s;
        });
      },
      id);
}

inline GaOutcome<GenerativeGene> evolve_generative(Environment& env, const GaParams& p, std::mt19937_64& rng) {
  auto fitness = [&](const GenerativeGene& g) { return plan_fitness(ga_generative_plan(env, g, ""), env.context(), p); };
  auto init = [](std::mt19937_64& r) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    GenerativeGene g{};
    for (double& x : g) x = u(r);
    return g;
  };
  auto crossover = [](const GenerativeGene& a, const GenerativeGene& b, std::mt19937_64& r) {
    std::bernoulli_distribution coin(0.5);
    GenerativeGene c{};
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = coin(r) ? a[k] : b[k];
    return c;
  };
  auto mutate = [&](GenerativeGene& g, std::mt19937_64& r) {
    std::bernoulli_distribution hit(p.mutation_rate);
    std::normal_distribution<double> noise(0.0, p.mutation_sigma);
    for (double& x : g)
      if (hit(r)) x += noise(r);
  };
  return run_ga<GenerativeGene>(p, rng, fitness, init, crossover, mutate);
}

/// Sorted candidate edge ids of fixed size K.
using SwapGenome = std::vector<EdgeId>;

/// Number of segments a swap genome carries under the environment's budget.
inline std::size_t swap_genome_size(const Environment& env) {
  const SlumContext& ctx = env.context();
  if (env.config().budget_mode == BudgetMode::kSegmentCount) return static_cast<std::size_t>(env.budget());
  std::vector<double> costs;
  for (EdgeId e : ctx.candidates) costs.push_back(ctx.graph.edges[e].cost);
  std::sort(costs.begin(), costs.end());
  std::size_t k = 0;
  double sum = 0.0;
  while (k < costs.size() && sum + costs[k] <= env.budget() * (1.0 + 1e-12)) sum += costs[k++];
  return std::max<std::size_t>(k, 1);
}

/// Applies the whole subset at once. Places left unconnected, a road network
/// split into pieces, or an overspent cost budget are penalised.
inline double swap_fitness(const std::shared_ptr<const SlumContext>& ctx, const SwapGenome& g, const GaParams& p,
                           std::optional<double> cost_budget = std::nullopt) {
  SlumGraph s(ctx);
  for (EdgeId e : g) s.set_road(e);
  const double nf = static_cast<double>(ctx->graph.faces.size());
  const double unconnected = (nf - static_cast<double>(s.connected_count())) / nf;
  double penalty = detail::roads_connected(s) ? 0.0 : 1.0;
  if (cost_budget && s.planned_cost() > *cost_budget * (1.0 + 1e-12)) penalty += 1.0;
  const double total_cost = std::max(ctx->graph.total_candidate_cost(), 1e-12);
  return -(p.w_nr * (unconnected + penalty) + p.w_ad * s.average_face_distance() / ctx->sentinel +
           p.w_sc * s.planned_cost() / total_cost);
}

/// Swaps one selected candidate for one unselected candidate.
inline void swap_mutation(SwapGenome& g, const std::vector<EdgeId>& candidates, std::mt19937_64& rng) {
  std::vector<EdgeId> outside;
  std::set_difference(candidates.begin(), candidates.end(), g.begin(), g.end(), std::back_inserter(outside));
  if (g.empty() || outside.empty()) return;
  std::uniform_int_distribution<std::size_t> pin(0, g.size() - 1), pout(0, outside.size() - 1);
  g[pin(rng)] = outside[pout(rng)];
  std::sort(g.begin(), g.end());
}

/// Keeps the shared edges and fills up to K from the symmetric difference.
inline SwapGenome swap_crossover(const SwapGenome& a, const SwapGenome& b, std::mt19937_64& rng) {
  SwapGenome child, diff;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(child));
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
  std::shuffle(diff.begin(), diff.end(), rng);
  for (std::size_t i = 0; child.size() < a.size() && i < diff.size(); ++i) child.push_back(diff[i]);
  std::sort(child.begin(), child.end());
  return child;
}

inline GaOutcome<SwapGenome> evolve_swap(const Environment& env, const GaParams& p, std::mt19937_64& rng) {
  auto ctx = env.context_ptr();
  std::vector<EdgeId> cands = ctx->candidates;
  std::sort(cands.begin(), cands.end());
  const std::size_t k = std::min(swap_genome_size(env), cands.size());
  std::optional<double> cost_budget;
  if (env.config().budget_mode == BudgetMode::kConstructionCost) cost_budget = env.budget();
  auto fitness = [&](const SwapGenome& g) { return swap_fitness(ctx, g, p, cost_budget); };
  auto init = [&](std::mt19937_64& r) {
    SwapGenome g = cands;
    std::shuffle(g.begin(), g.end(), r);
    g.resize(k);
    std::sort(g.begin(), g.end());
    return g;
  };
  auto mutate = [&](SwapGenome& g, std::mt19937_64& r) {
    std::bernoulli_distribution hit(p.mutation_rate);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (hit(r)) swap_mutation(g, cands, r);
  };
  return run_ga<SwapGenome>(p, rng, fitness, init, swap_crossover, mutate);
}

/// Replays a subset as an ordered plan: edges touching the road network
/// first, most newly reached places first, then the lowest id.
inline PlanReport replay_subset(Environment& env, SwapGenome subset, const std::string& id) {
  env.reset();
  return run_episode(
      env,
      [&](const Environment& e) -> EdgeId {
        const Mask& m = e.action_mask();
        EdgeId best = -1;
        std::pair<int, int> best_key{-1, -1};
        for (EdgeId x : subset) {
          if (!m[x]) continue;
          const Edge& ed = e.context().graph.edges[x];
          const int touching = (e.state().on_road(ed.a) || e.state().on_road(ed.b)) ? 1 : 0;
          const std::pair<int, int> key{touching, touching ? e.far_endpoint_count(x) : 0};
          if (best < 0 || key > best_key) {
            best = x;
            best_key = key;
          }
        }
        if (best >= 0) std::erase(subset, best);
        return best;
      },
      id);
}

// ---------------------------------------------------------------------------
// Heuristic search with Monte Carlo path sampling

struct PathQuery {
  std::vector<NodeId> sources;
  std::vector<char> is_target;  // per node
};

namespace detail {

/// Nodes from which some target is reachable over non-road edges.
inline std::vector<char> can_reach(const SlumGraph& s, const PathQuery& q) {
  const PlanarGraph& g = s.graph();
  std::vector<char> ok(g.nodes.size(), 0);
  std::vector<NodeId> stack;
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v)
    if (q.is_target[v]) {
      ok[v] = 1;
      stack.push_back(v);
    }
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (EdgeId e : g.node_edges[v]) {
      if (s.road(e)) continue;
      const NodeId w = g.edges[e].other(v);
      if (!ok[w]) {
        ok[w] = 1;
        stack.push_back(w);
      }
    }
  }
  return ok;
}

inline double path_cost(const PlanarGraph& g, const std::vector<EdgeId>& p) {
  double c = 0.0;
  for (EdgeId e : p) c += g.edges[e].cost;
  return c;
}

}  // namespace detail

/// One uniform random simple walk over non-road edges from a source to the
/// first target it meets. Empty when the walk gets stuck.
inline std::vector<EdgeId> sample_path(const SlumGraph& s, const PathQuery& q, const std::vector<char>& reach,
                                       std::mt19937_64& rng) {
  const PlanarGraph& g = s.graph();
  std::vector<NodeId> starts;
  for (NodeId v : q.sources)
    if (reach[v] && !q.is_target[v]) starts.push_back(v);
  if (starts.empty()) return {};
  NodeId cur = starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
  std::vector<char> visited(g.nodes.size(), 0);
  visited[cur] = 1;
  std::vector<EdgeId> path;
  std::vector<EdgeId> options;
  while (!q.is_target[cur]) {
    options.clear();
    for (EdgeId e : g.node_edges[cur]) {
      if (s.road(e)) continue;
      const NodeId w = g.edges[e].other(cur);
      if (!visited[w] && reach[w]) options.push_back(e);
    }
    if (options.empty()) return {};
    const EdgeId e = options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
    path.push_back(e);
    cur = g.edges[e].other(cur);
    visited[cur] = 1;
  }
  return path;
}

/// Cheapest source-to-target path over non-road edges (Dijkstra on cost).
inline std::vector<EdgeId> cheapest_path(const SlumGraph& s, const PathQuery& q) {
  const PlanarGraph& g = s.graph();
  const std::size_t n = g.nodes.size();
  std::vector<double> dist(n, kInf);
  std::vector<EdgeId> via(n, -1);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (NodeId v : q.sources)
    if (!q.is_target[v]) {
      dist[v] = 0.0;
      pq.emplace(0.0, v);
    }
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    if (q.is_target[v]) {
      std::vector<EdgeId> path;
      for (NodeId x = v; via[x] >= 0; x = g.edges[via[x]].other(x)) path.push_back(via[x]);
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (EdgeId e : g.node_edges[v]) {
      if (s.road(e)) continue;
      const NodeId w = g.edges[e].other(v);
      const double nd = d + g.edges[e].cost;
      if (nd < dist[w]) {
        dist[w] = nd;
        via[w] = e;
        pq.emplace(nd, w);
      }
    }
  }
  return {};
}

/// Lowest-cost path among `samples` random walks; the cheapest path when
/// every walk fails.
inline std::vector<EdgeId> monte_carlo_path(const SlumGraph& s, const PathQuery& q, std::size_t samples,
                                            std::mt19937_64& rng) {
  const auto reach = detail::can_reach(s, q);
  std::vector<EdgeId> best;
  double best_cost = kInf;
  for (std::size_t i = 0; i < samples; ++i) {
    auto p = sample_path(s, q, reach, rng);
    if (p.empty()) continue;
    const double c = detail::path_cost(s.graph(), p);
    if (c < best_cost) {
      best_cost = c;
      best = std::move(p);
    }
  }
  if (best.empty()) best = cheapest_path(s, q);
  return best;
}

/// Stage I target: the unconnected place farthest from the road network.
inline std::optional<PathQuery> hs_connect_query(const SlumGraph& s) {
  const SlumContext& ctx = s.context();
  const PlanarGraph& g = ctx.graph;
  FaceId target = -1;
  double worst = -1.0;
  for (FaceId f = 0; f < static_cast<FaceId>(g.faces.size()); ++f) {
    if (s.connected(f)) continue;
    double d = kInf;
    for (NodeId a : g.face_nodes[f])
      for (NodeId r = 0; r < static_cast<NodeId>(g.nodes.size()); ++r)
        if (s.on_road(r)) d = std::min(d, ctx.full_dist(a, r));
    if (d > worst) {
      worst = d;
      target = f;
    }
  }
  if (target < 0) return std::nullopt;
  PathQuery q;
  q.is_target.assign(g.nodes.size(), 0);
  for (NodeId v : g.face_nodes[target]) q.is_target[v] = 1;
  for (NodeId v = 0; v < static_cast<NodeId>(g.nodes.size()); ++v)
    if (s.on_road(v)) q.sources.push_back(v);
  return q;
}

/// Stage II targets: place pairs ordered by the worse place's mean distance,
/// then by pair distance, both descending.
inline std::vector<std::pair<FaceId, FaceId>> hs_shorten_pairs(const SlumGraph& s) {
  const auto nf = static_cast<FaceId>(s.graph().faces.size());
  std::vector<double> mean(nf, 0.0);
  for (FaceId u = 0; u < nf; ++u) {
    for (FaceId v = 0; v < nf; ++v)
      if (u != v) mean[u] += s.face_distance(u, v);
    if (nf > 1) mean[u] /= nf - 1;
  }
  std::vector<FaceId> order(nf);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](FaceId a, FaceId b) { return mean[a] > mean[b]; });
  std::vector<std::pair<FaceId, FaceId>> out;
  for (FaceId u : order) {
    std::vector<FaceId> partners;
    for (FaceId v = 0; v < nf; ++v)
      if (v != u) partners.push_back(v);
    std::stable_sort(partners.begin(), partners.end(),
                     [&](FaceId a, FaceId b) { return s.face_distance(u, a) > s.face_distance(u, b); });
    for (FaceId v : partners) out.emplace_back(u, v);
  }
  return out;
}

/// Adds one sampled path at a time towards the least connected place.
inline PlanReport hs_mc_plan(Environment& env, std::size_t samples, std::mt19937_64& rng, const std::string& id) {
  env.reset();
  std::deque<EdgeId> queue;
  auto refill = [&](const Environment& e) {
    const SlumGraph& s = e.state();
    if (!s.universally_connected()) {
      const auto q = hs_connect_query(s);
      auto path = monte_carlo_path(s, *q, samples, rng);
      if (path.empty()) throw DeadlockError("no candidate path reaches the target place");
      queue.assign(path.begin(), path.end());
      return;
    }
    const PlanarGraph& g = s.graph();
    for (auto [u, v] : hs_shorten_pairs(s)) {
      PathQuery q;
      q.is_target.assign(g.nodes.size(), 0);
      for (NodeId x : g.face_nodes[u]) q.is_target[x] = 1;
      for (NodeId x : s.access(v)) q.sources.push_back(x);
      auto path = monte_carlo_path(s, q, samples, rng);
      if (!path.empty()) {
        queue.assign(path.begin(), path.end());
        return;
      }
    }
  };
  return run_episode(
      env,
      [&](const Environment& e) -> EdgeId {
        if (queue.empty()) refill(e);
        if (queue.empty()) return -1;  // no shortcut path remains
        const EdgeId x = queue.front();
        queue.pop_front();
        return e.action_mask()[x] ? x : -1;  // an unaffordable edge ends the plan
      },
      id);
}

// ---------------------------------------------------------------------------

struct BaselineRun {
  PlanReport report;
  std::vector<double> ga_curve;  // best fitness per generation, GA planners only
};

inline BaselineRun run_baseline(const BaselineSpec& spec, const std::shared_ptr<const SlumContext>& ctx,
                                const EnvConfig& env_cfg) {
  if (spec.kind == BaselineKind::kGreedyA && !spec.masked) throw ConfigError("greedy_a is only defined with the mask");
  const bool whole_plan = spec.kind == BaselineKind::kGaSwap || spec.kind == BaselineKind::kHsMc;
  Environment env(ctx, detail::with_masking(env_cfg, spec.masked && !whole_plan));
  std::mt19937_64 rng(spec.seed);
  const std::string id = planner_id(spec);
  BaselineRun out;
  switch (spec.kind) {
    case BaselineKind::kRandom:
      out.report = run_episode(env, [&](const Environment& e) { return random_choice(e, rng); }, id);
      break;
    case BaselineKind::kGreedyA:
      out.report = run_episode(env, [&](const Environment& e) { return greedy_a_choice(e, rng); }, id);
      break;
    case BaselineKind::kGreedyC:
      out.report = run_episode(env, [](const Environment& e) { return greedy_c_choice(e); }, id);
      break;
    case BaselineKind::kMst:
      out.report = mst_plan(env, id);
      break;
    case BaselineKind::kGaGenerative: {
      auto ga = evolve_generative(env, spec.ga, rng);
      out.report = ga_generative_plan(env, ga.best.genome, id);
      out.ga_curve = std::move(ga.best_per_generation);
      break;
    }
    case BaselineKind::kGaSwap: {
      auto ga = evolve_swap(env, spec.ga, rng);
      out.report = replay_subset(env, ga.best.genome, id);
      out.ga_curve = std::move(ga.best_per_generation);
      break;
    }
    case BaselineKind::kHsMc:
      out.report = hs_mc_plan(env, spec.hs_samples, rng, id);
      break;
  }
  return out;
}

}  // namespace slumroad
