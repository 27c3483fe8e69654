#pragma once

#include <algorithm>
#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "slumroad/centrality.hpp"
#include "slumroad/errors.hpp"
#include "slumroad/matrix.hpp"
#include "slumroad/planar_graph.hpp"

namespace slumroad {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

namespace detail {

/// Dijkstra over the edges accepted by `use`, weighted by edge length.
template <class EdgeFilter>
std::vector<double> dijkstra(const PlanarGraph& g, NodeId source, EdgeFilter&& use) {
  std::vector<double> dist(g.nodes.size(), kInf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0.0;
  pq.emplace(0.0, source);
  while (!pq.empty()) {
    auto [d, v] = pq.top();
    pq.pop();
    if (d > dist[v]) continue;
    for (EdgeId e : g.node_edges[v]) {
      if (!use(e)) continue;
      const NodeId w = g.edges[e].other(v);
      const double nd = d + g.edges[e].length;
      if (nd < dist[w]) {
        dist[w] = nd;
        pq.emplace(nd, w);
      }
    }
  }
  return dist;
}

}  // namespace detail

/// Immutable per-slum data shared by every episode on that slum.
struct SlumContext {
  PlanarGraph graph;
  Matrix centrality;                 // N x 4, static
  std::vector<double> full_distance; // N x N over all edges
  double diameter = 0.0;             // of the all-edges graph
  double sentinel = 0.0;             // stands in for "unreachable"
  std::vector<char> exterior_node;
  std::vector<EdgeId> candidates;
  std::string id;

  double full_dist(NodeId a, NodeId b) const { return full_distance[static_cast<std::size_t>(a) * graph.nodes.size() + b]; }
};

inline std::shared_ptr<const SlumContext> make_context(PlanarGraph graph, std::string id = "slum") {
  auto ctx = std::make_shared<SlumContext>();
  ctx->id = std::move(id);
  ctx->graph = std::move(graph);
  const PlanarGraph& g = ctx->graph;
  if (g.faces.empty()) throw TopologyError("slum has no faces");
  ctx->centrality = centralities(g);
  const std::size_t n = g.nodes.size();
  ctx->full_distance.resize(n * n);
  for (std::size_t s = 0; s < n; ++s) {
    auto d = detail::dijkstra(g, static_cast<NodeId>(s), [](EdgeId) { return true; });
    std::copy(d.begin(), d.end(), ctx->full_distance.begin() + static_cast<std::ptrdiff_t>(s * n));
    for (double v : d) ctx->diameter = std::max(ctx->diameter, v);
  }
  // Twice the all-edges diameter. A sparse road network can detour beyond it,
  // so distance-valued outputs are capped here.
  ctx->sentinel = 2.0 * ctx->diameter;
  if (!(ctx->sentinel > 0.0)) ctx->sentinel = 1.0;
  ctx->exterior_node.assign(n, 0);
  for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) {
    const Edge& ed = g.edges[e];
    if (ed.exterior) {
      ctx->exterior_node[ed.a] = 1;
      ctx->exterior_node[ed.b] = 1;
    } else {
      ctx->candidates.push_back(e);
    }
  }
  return ctx;
}

// Feature table layouts.
namespace feature {
inline constexpr std::size_t kNodeDim = 9;
inline constexpr std::size_t kEdgeDim = 3;
inline constexpr std::size_t kFaceDim = 3;

enum NodeColumn : std::size_t {
  kX = 0, kY = 1, kDegree = 2, kBetweenness = 3, kEigenvector = 4, kCloseness = 5,
  kOnRoad = 6, kRoadRatio = 7, kAvgN2N = 8
};
enum EdgeColumn : std::size_t { kCost = 0, kRoad = 1, kStraightness = 2 };
enum FaceColumn : std::size_t { kConnected = 0, kAvgF2F = 1, kF2E = 2 };
}  // namespace feature

struct FeatureSet {
  Matrix node;  // N x 9
  Matrix edge;  // E x 3
  Matrix face;  // F x 3

  friend bool operator==(const FeatureSet&, const FeatureSet&) = default;
};

struct Metrics {
  std::optional<int> nr;  // steps until universal connectivity; empty if never reached
  double ad = 0.0;
  double sc = 0.0;
  bool universal = false;
};

/// The mutable road network of one episode: road flags plus everything
/// derived from them (road nodes, connected places, road distances).
class SlumGraph {
 public:
  explicit SlumGraph(std::shared_ptr<const SlumContext> ctx) : ctx_(std::move(ctx)) {
    const PlanarGraph& g = graph();
    const std::size_t n = g.nodes.size();
    road_.assign(g.edges.size(), 0);
    on_road_.assign(n, 0);
    connected_.assign(g.faces.size(), 0);
    access_.assign(g.faces.size(), {});
    dist_.assign(n * n, kInf);
    for (std::size_t v = 0; v < n; ++v) dist_[v * n + v] = 0.0;
    for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e)
      if (g.edges[e].exterior) apply_road(e);
    if (universally_connected()) connectivity_step_ = 0;
  }

  const SlumContext& context() const { return *ctx_; }
  std::shared_ptr<const SlumContext> context_ptr() const { return ctx_; }
  const PlanarGraph& graph() const { return ctx_->graph; }
  double sentinel() const { return ctx_->sentinel; }

  bool road(EdgeId e) const { return road_[e] != 0; }
  bool on_road(NodeId n) const { return on_road_[n] != 0; }
  bool connected(FaceId f) const { return connected_[f] != 0; }
  std::size_t connected_count() const { return connected_count_; }
  bool universally_connected() const { return connected_count_ == graph().faces.size(); }
  const std::vector<NodeId>& access(FaceId f) const { return access_[f]; }

  const std::vector<EdgeId>& planned() const { return planned_; }
  double planned_cost() const { return planned_cost_; }
  std::optional<int> connectivity_step() const { return connectivity_step_; }

  /// Number of currently unconnected faces that contain node n.
  int unconnected_faces_at(NodeId n) const {
    int c = 0;
    for (FaceId f : graph().node_faces[n]) c += connected_[f] ? 0 : 1;
    return c;
  }

  /// Turns a candidate into a road and refreshes the derived state.
  void set_road(EdgeId e) {
    if (e < 0 || static_cast<std::size_t>(e) >= road_.size())
      throw InvalidAction("edge " + std::to_string(e) + " does not exist");
    if (road_[e]) throw InvalidAction("edge " + std::to_string(e) + " is already a road");
    apply_road(e);
    planned_.push_back(e);
    planned_cost_ += graph().edges[e].cost;
    if (!connectivity_step_ && universally_connected())
      connectivity_step_ = static_cast<int>(planned_.size());
  }

  /// Shortest road-network distance; +inf when unreachable.
  double node_distance(NodeId a, NodeId b) const { return dist_[static_cast<std::size_t>(a) * graph().nodes.size() + b]; }

  /// Road distance between two places through their road-touching boundary
  /// nodes, capped at the sentinel; the sentinel when either is unconnected
  /// or unreachable. The cap keeps the value non-increasing as roads are
  /// added even when a detour is longer than the sentinel.
  double face_distance(FaceId u, FaceId v) const {
    if (u == v) return 0.0;
    if (!connected_[u] || !connected_[v]) return sentinel();
    double best = kInf;
    const std::size_t n = graph().nodes.size();
    for (NodeId a : access_[u]) {
      const double* row = dist_.data() + static_cast<std::size_t>(a) * n;
      for (NodeId b : access_[v]) best = std::min(best, row[b]);
    }
    return std::min(best, sentinel());
  }

  /// Mean face_distance over unordered face pairs (0 for a single face).
  double average_face_distance() const {
    const auto nf = static_cast<FaceId>(graph().faces.size());
    if (nf < 2) return 0.0;
    double sum = 0.0;
    for (FaceId u = 0; u < nf; ++u)
      for (FaceId v = u + 1; v < nf; ++v) sum += face_distance(u, v);
    return sum / (0.5 * nf * (nf - 1.0));
  }

  Metrics metrics() const {
    Metrics m;
    m.nr = connectivity_step_;
    m.universal = universally_connected();
    m.ad = average_face_distance();
    m.sc = planned_cost_;
    return m;
  }

  FeatureSet features() const;

 private:
  void apply_road(EdgeId e) {
    const PlanarGraph& g = graph();
    const Edge& ed = g.edges[e];
    road_[e] = 1;
    for (NodeId v : {ed.a, ed.b}) {
      if (on_road_[v]) continue;
      on_road_[v] = 1;
      for (FaceId f : g.node_faces[v]) {
        access_[f].push_back(v);
        std::sort(access_[f].begin(), access_[f].end());
        if (!connected_[f]) {
          connected_[f] = 1;
          ++connected_count_;
        }
      }
    }
    insert_edge_distance(ed.a, ed.b, ed.length);
  }

  // All-pairs update for one inserted edge: a new shortest path uses the new
  // edge at most once, in one of two directions.
  void insert_edge_distance(NodeId a, NodeId b, double w) {
    const std::size_t n = graph().nodes.size();
    const double* ra = dist_.data() + static_cast<std::size_t>(a) * n;
    const double* rb = dist_.data() + static_cast<std::size_t>(b) * n;
    std::vector<double> da(ra, ra + n), db(rb, rb + n);
    for (std::size_t x = 0; x < n; ++x) {
      const double xa = da[x], xb = db[x];
      if (xa == kInf && xb == kInf) continue;
      double* row = dist_.data() + x * n;
      for (std::size_t y = 0; y < n; ++y) {
        const double c = std::min(xa + w + db[y], xb + w + da[y]);
        if (c < row[y]) row[y] = c;
      }
    }
  }

  std::shared_ptr<const SlumContext> ctx_;
  std::vector<char> road_;
  std::vector<char> on_road_;
  std::vector<char> connected_;
  std::vector<std::vector<NodeId>> access_;
  std::size_t connected_count_ = 0;
  std::vector<double> dist_;
  std::vector<EdgeId> planned_;
  double planned_cost_ = 0.0;
  std::optional<int> connectivity_step_;
};

inline FeatureSet SlumGraph::features() const {
  using namespace feature;
  const PlanarGraph& g = graph();
  const std::size_t n = g.nodes.size();
  const std::size_t ne = g.edges.size();
  const std::size_t nf = g.faces.size();
  const double big = sentinel();
  FeatureSet fs{Matrix(n, kNodeDim), Matrix(ne, kEdgeDim), Matrix(nf, kFaceDim)};

  std::vector<NodeId> road_nodes;
  for (std::size_t v = 0; v < n; ++v)
    if (on_road_[v]) road_nodes.push_back(static_cast<NodeId>(v));

  for (std::size_t v = 0; v < n; ++v) {
    auto row = fs.node.row(v);
    row[kX] = g.nodes[v].x;
    row[kY] = g.nodes[v].y;
    for (std::size_t c = 0; c < 4; ++c) row[feature::kDegree + c] = ctx_->centrality(v, c);
    row[kOnRoad] = on_road_[v] ? 1.0 : 0.0;
    if (!on_road_[v]) {
      row[kRoadRatio] = 0.0;
      row[kAvgN2N] = big;
      continue;
    }
    const auto& inc = g.node_edges[v];
    std::size_t roads = 0;
    for (EdgeId e : inc) roads += road_[e] ? 1 : 0;
    row[kRoadRatio] = static_cast<double>(roads) / static_cast<double>(inc.size());
    double sum = 0.0;
    std::size_t count = 0;
    for (NodeId w : road_nodes) {
      if (w == static_cast<NodeId>(v)) continue;
      const double d = node_distance(static_cast<NodeId>(v), w);
      sum += std::min(d, big);
      ++count;
    }
    row[kAvgN2N] = count ? sum / static_cast<double>(count) : 0.0;
  }

  for (std::size_t e = 0; e < ne; ++e) {
    const Edge& ed = g.edges[e];
    auto row = fs.edge.row(e);
    row[kCost] = ed.cost;
    row[kRoad] = road_[e] ? 1.0 : 0.0;
    const double d = node_distance(ed.a, ed.b);
    if (!on_road_[ed.a] || !on_road_[ed.b] || d == kInf) {
      row[kStraightness] = big;
    } else {
      const double euclid = distance(g.nodes[ed.a], g.nodes[ed.b]);
      row[kStraightness] = euclid > 0.0 ? d / euclid : 1.0;
    }
  }

  for (std::size_t f = 0; f < nf; ++f) {
    auto row = fs.face.row(f);
    row[kConnected] = connected_[f] ? 1.0 : 0.0;
    if (!connected_[f]) {
      row[kAvgF2F] = big;
      row[kF2E] = big;
      continue;
    }
    double sum = 0.0;
    for (std::size_t h = 0; h < nf; ++h)
      if (h != f) sum += face_distance(static_cast<FaceId>(f), static_cast<FaceId>(h));
    row[kAvgF2F] = nf > 1 ? sum / static_cast<double>(nf - 1) : 0.0;
    double best = kInf;
    for (NodeId a : access_[f])
      for (std::size_t x = 0; x < n; ++x)
        if (ctx_->exterior_node[x]) best = std::min(best, node_distance(a, static_cast<NodeId>(x)));
    row[kF2E] = std::min(best, big);
  }
  return fs;
}

}  // namespace slumroad
