#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/slumroad.hpp"

namespace testing_support {

using namespace slumroad;

inline std::shared_ptr<const SlumContext> grid(int rows, int cols, double jitter = 0.0, std::uint64_t seed = 1,
                                               PrepareOptions opt = {}) {
  return load_context(generate_synthetic(rows, cols, jitter, seed), opt,
                      "grid" + std::to_string(rows) + "x" + std::to_string(cols));
}

/// Exterior pentagon around a unit square with a triangular roof; one candidate.
inline SlumGeometry house() {
  SlumGeometry g;
  g.exterior = {{0, 0}, {1, 0}, {1, 1}, {0.5, 1.6}, {0, 1}};
  g.places = {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}, {{0, 1}, {1, 1}, {0.5, 1.6}}};
  return g;
}

/// Four hexagonal wedges between the exterior square and an inner square
/// place, joined by two-segment diagonal spokes. No single segment can
/// reach the inner place from the exterior. Must be loaded unsimplified.
inline SlumGeometry walled_courtyard() {
  const Point a{0, 0}, b{4, 0}, c{4, 4}, d{0, 4};
  const Point m1{0.75, 0.75}, m2{3.25, 0.75}, m3{3.25, 3.25}, m4{0.75, 3.25};
  const Point u1{1.5, 1.5}, u2{2.5, 1.5}, u3{2.5, 2.5}, u4{1.5, 2.5};
  SlumGeometry g;
  g.exterior = {a, b, c, d};
  g.places = {{a, b, m2, u2, u1, m1}, {b, c, m3, u3, u2, m2}, {c, d, m4, u4, u3, m3}, {d, a, m1, u1, u4, m4},
              {u1, u2, u3, u4}};
  return g;
}

inline constexpr double kInfD = std::numeric_limits<double>::infinity();

/// Floyd-Warshall over the edges accepted by `use`, weighted by length.
template <class Use>
std::vector<std::vector<double>> floyd_warshall(const PlanarGraph& g, Use&& use) {
  const std::size_t n = g.nodes.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInfD));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) {
    if (!use(e)) continue;
    const Edge& ed = g.edges[e];
    d[ed.a][ed.b] = std::min(d[ed.a][ed.b], ed.length);
    d[ed.b][ed.a] = std::min(d[ed.b][ed.a], ed.length);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

/// Face distance by its definition, from a Floyd-Warshall table.
inline double reference_face_distance(const SlumGraph& s, const std::vector<std::vector<double>>& d, FaceId u,
                                      FaceId v) {
  if (u == v) return 0.0;
  const PlanarGraph& g = s.graph();
  std::vector<NodeId> au, av;
  for (NodeId x : g.face_nodes[u])
    if (s.on_road(x)) au.push_back(x);
  for (NodeId x : g.face_nodes[v])
    if (s.on_road(x)) av.push_back(x);
  if (au.empty() || av.empty()) return s.sentinel();
  double best = kInfD;
  for (NodeId x : au)
    for (NodeId y : av) best = std::min(best, d[x][y]);
  return std::min(best, s.sentinel());  // road detours longer than the sentinel are capped
}

inline Params random_params(const ModelConfig& cfg, std::uint64_t seed, double scale = 0.5) {
  Params p = zero_params(cfg);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  p.for_each([&](const std::string&, Matrix& m) {
    for (double& v : m.values()) v = u(rng);
  });
  return p;
}

/// Plays `steps` uniformly random masked actions (fewer if the episode ends).
inline void random_walk(Environment& env, std::size_t steps, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < steps && !env.done(); ++i) {
    const Mask& m = env.action_mask();
    std::vector<EdgeId> allowed;
    for (std::size_t e = 0; e < m.size(); ++e)
      if (m[e]) allowed.push_back(static_cast<EdgeId>(e));
    env.step(allowed[std::uniform_int_distribution<std::size_t>(0, allowed.size() - 1)(rng)]);
  }
}

}  // namespace testing_support
