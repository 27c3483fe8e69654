#pragma once

#include <cmath>
#include <deque>
#include <vector>

#include "slumroad/errors.hpp"
#include "slumroad/matrix.hpp"
#include "slumroad/planar_graph.hpp"

namespace slumroad {

/// Column order of the centrality table.
enum CentralityColumn : std::size_t { kDegree = 0, kBetweenness = 1, kEigenvector = 2, kCloseness = 3 };

namespace detail {

inline std::vector<std::vector<NodeId>> adjacency(const PlanarGraph& g) {
  std::vector<std::vector<NodeId>> adj(g.nodes.size());
  for (const Edge& e : g.edges) {
    adj[e.a].push_back(e.b);
    adj[e.b].push_back(e.a);
  }
  return adj;
}

}  // namespace detail

/// Degree, betweenness, eigenvector and closeness centrality of every node on
/// the full (road + candidate) graph, hop-count based, each in its usual
/// normalised [0, 1] convention. Returns an N x 4 table.
inline Matrix centralities(const PlanarGraph& g) {
  const std::size_t n = g.nodes.size();
  Matrix out(n, 4);
  if (n == 0) return out;
  if (!is_connected(g)) throw DomainError("centralities require a connected graph");
  const auto adj = detail::adjacency(g);
  const double nm1 = static_cast<double>(n) - 1.0;

  for (std::size_t v = 0; v < n; ++v) out(v, kDegree) = n > 1 ? static_cast<double>(adj[v].size()) / nm1 : 0.0;

  // Brandes accumulation over BFS trees; also yields closeness sums.
  std::vector<double> between(n, 0.0);
  std::vector<long> dist(n);
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<NodeId>> preds(n);
  std::vector<NodeId> order;
  for (std::size_t s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();
    order.clear();
    std::deque<NodeId> queue{static_cast<NodeId>(s)};
    dist[s] = 0;
    sigma[s] = 1.0;
    while (!queue.empty()) {
      const NodeId v = queue.front();
      queue.pop_front();
      order.push_back(v);
      for (NodeId w : adj[v]) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    double total = 0.0;
    for (std::size_t v = 0; v < n; ++v) total += static_cast<double>(dist[v]);
    out(s, kCloseness) = total > 0.0 ? nm1 / total : 0.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      const NodeId w = *it;
      for (NodeId v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != static_cast<NodeId>(s)) between[w] += delta[w];
    }
  }
  // Each unordered pair was counted from both ends.
  const double scale = n > 2 ? 1.0 / (nm1 * (nm1 - 1.0)) : 0.0;
  for (std::size_t v = 0; v < n; ++v) out(v, kBetweenness) = between[v] * scale;

  // Power iteration on A + I (same leading eigenvector as A, but converges on
  // bipartite graphs such as grids), unit L2 norm.
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), next(n);
  constexpr int kMaxIterations = 1000;
  constexpr double kTolerance = 1e-8;
  bool converged = false;
  for (int it = 0; it < kMaxIterations && !converged; ++it) {
    for (std::size_t v = 0; v < n; ++v) {
      double s = x[v];
      for (NodeId w : adj[v]) s += x[w];
      next[v] = s;
    }
    double norm = 0.0;
    for (double v : next) norm += v * v;
    norm = std::sqrt(norm);
    if (!(norm > 0.0)) throw ConvergenceError("eigenvector iteration collapsed to zero");
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      next[v] /= norm;
      change += std::abs(next[v] - x[v]);
    }
    x.swap(next);
    converged = change < static_cast<double>(n) * kTolerance;
  }
  if (!converged) throw ConvergenceError("eigenvector centrality did not converge in 1000 iterations");
  for (std::size_t v = 0; v < n; ++v) out(v, kEigenvector) = x[v];
  return out;
}

}  // namespace slumroad
