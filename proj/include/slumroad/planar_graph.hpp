#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/errors.hpp"
#include "slumroad/geometry.hpp"

namespace slumroad {

using NodeId = std::int32_t;
using EdgeId = std::int32_t;
using FaceId = std::int32_t;

struct Edge {
  NodeId a = 0;
  NodeId b = 0;
  double length = 0.0;  // travel length along the segment
  double cost = 0.0;    // construction cost
  bool road = false;
  bool exterior = false;
  std::vector<Point> polyline;  // geometry from a to b, endpoints included

  NodeId other(NodeId n) const { return n == a ? b : a; }
};

struct Face {
  std::vector<EdgeId> edges;  // closed boundary cycle
  std::vector<NodeId> nodes;  // boundary node cycle: edges[i] joins nodes[i] and nodes[i+1]
};

/// Planar subdivision of a slum. Faces are places; exterior edges are the
/// surrounding roads; every other edge is a candidate segment.
struct PlanarGraph {
  std::vector<Point> nodes;
  std::vector<Edge> edges;
  std::vector<Face> faces;

  // Incidence, rebuilt by finalize().
  std::vector<std::vector<EdgeId>> node_edges;
  std::vector<std::vector<FaceId>> edge_faces;
  std::vector<std::vector<NodeId>> face_nodes;  // sorted, unique
  std::vector<std::vector<FaceId>> node_faces;

  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_edges() const { return edges.size(); }
  std::size_t num_faces() const { return faces.size(); }

  std::size_t num_candidates() const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return !e.exterior; }));
  }

  double total_candidate_cost() const {
    double c = 0.0;
    for (const Edge& e : edges)
      if (!e.exterior) c += e.cost;
    return c;
  }

  double mean_edge_length() const {
    double s = 0.0;
    for (const Edge& e : edges) s += e.length;
    return edges.empty() ? 0.0 : s / static_cast<double>(edges.size());
  }

  /// Euler characteristic including the unbounded outer face.
  long euler_characteristic() const {
    return static_cast<long>(nodes.size()) - static_cast<long>(edges.size()) +
           static_cast<long>(faces.size()) + 1;
  }

  void finalize();
};

namespace detail {

/// Recovers the boundary node cycle of a face from its edge cycle.
inline std::vector<NodeId> cycle_nodes(const std::vector<Edge>& edges, const std::vector<EdgeId>& cycle) {
  const std::size_t n = cycle.size();
  if (n < 2) throw TopologyError("face cycle with fewer than 2 edges");
  std::vector<NodeId> out;
  out.reserve(n);
  const Edge& first = edges[cycle[0]];
  const Edge& second = edges[cycle[1]];
  NodeId start = first.a;
  if (first.a == second.a || first.a == second.b) start = first.b;
  NodeId cur = start;
  for (std::size_t i = 0; i < n; ++i) {
    const Edge& e = edges[cycle[i]];
    if (e.a != cur && e.b != cur) throw TopologyError("face edge cycle is not closed");
    out.push_back(cur);
    cur = e.other(cur);
  }
  if (cur != start) throw TopologyError("face edge cycle is not closed");
  return out;
}

}  // namespace detail

inline void PlanarGraph::finalize() {
  const auto nn = nodes.size();
  node_edges.assign(nn, {});
  node_faces.assign(nn, {});
  edge_faces.assign(edges.size(), {});
  face_nodes.assign(faces.size(), {});
  for (EdgeId e = 0; e < static_cast<EdgeId>(edges.size()); ++e) {
    const Edge& ed = edges[e];
    if (ed.a < 0 || ed.b < 0 || static_cast<std::size_t>(ed.a) >= nn ||
        static_cast<std::size_t>(ed.b) >= nn)
      throw TopologyError("edge " + std::to_string(e) + " references a missing node");
    if (ed.a == ed.b) throw TopologyError("edge " + std::to_string(e) + " is a self-loop");
    node_edges[ed.a].push_back(e);
    node_edges[ed.b].push_back(e);
  }
  for (FaceId f = 0; f < static_cast<FaceId>(faces.size()); ++f) {
    Face& face = faces[f];
    for (EdgeId e : face.edges) {
      if (e < 0 || static_cast<std::size_t>(e) >= edges.size())
        throw TopologyError("face " + std::to_string(f) + " references a missing edge");
    }
    face.nodes = detail::cycle_nodes(edges, face.edges);
    std::vector<EdgeId> unique_edges = face.edges;
    std::sort(unique_edges.begin(), unique_edges.end());
    unique_edges.erase(std::unique(unique_edges.begin(), unique_edges.end()), unique_edges.end());
    for (EdgeId e : unique_edges) edge_faces[e].push_back(f);
    auto& fn = face_nodes[f];
    fn = face.nodes;
    std::sort(fn.begin(), fn.end());
    fn.erase(std::unique(fn.begin(), fn.end()), fn.end());
    for (NodeId n : fn) node_faces[n].push_back(f);
  }
  for (EdgeId e = 0; e < static_cast<EdgeId>(edges.size()); ++e) {
    if (!edges[e].exterior && edge_faces[e].empty())
      throw TopologyError("dangling edge " + std::to_string(e) + " borders no face");
    if (edges[e].exterior) edges[e].road = true;
  }
}

/// Whether every node can reach every other through edges of any kind.
inline bool is_connected(const PlanarGraph& g) {
  if (g.nodes.empty()) return true;
  std::vector<char> seen(g.nodes.size(), 0);
  std::vector<NodeId> stack{0};
  seen[0] = 1;
  std::size_t count = 1;
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    for (EdgeId e : g.node_edges[n]) {
      const NodeId m = g.edges[e].other(n);
      if (!seen[m]) {
        seen[m] = 1;
        ++count;
        stack.push_back(m);
      }
    }
  }
  return count == g.nodes.size();
}

/// Lists violated PlanarGraph invariants (empty when the graph is sound).
inline std::vector<std::string> invariant_violations(const PlanarGraph& g) {
  std::vector<std::string> out;
  if (g.euler_characteristic() != 2)
    out.push_back("Euler characteristic " + std::to_string(g.euler_characteristic()) + " != 2");
  for (FaceId f = 0; f < static_cast<FaceId>(g.faces.size()); ++f) {
    try {
      detail::cycle_nodes(g.edges, g.faces[f].edges);
    } catch (const TopologyError&) {
      out.push_back("face " + std::to_string(f) + " cycle not closed");
    }
    std::vector<NodeId> endpoints;
    for (EdgeId e : g.faces[f].edges) {
      endpoints.push_back(g.edges[e].a);
      endpoints.push_back(g.edges[e].b);
    }
    std::sort(endpoints.begin(), endpoints.end());
    endpoints.erase(std::unique(endpoints.begin(), endpoints.end()), endpoints.end());
    if (endpoints != g.face_nodes[f])
      out.push_back("face " + std::to_string(f) + " node set differs from its edge endpoints");
  }
  for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) {
    const Edge& ed = g.edges[e];
    if (!ed.exterior && g.edge_faces[e].empty())
      out.push_back("candidate edge " + std::to_string(e) + " borders no face");
    if (ed.exterior && !ed.road) out.push_back("exterior edge " + std::to_string(e) + " not a road");
    if (ed.length < 0.0 || ed.cost < 0.0)
      out.push_back("edge " + std::to_string(e) + " has negative length or cost");
  }
  if (!is_connected(g)) out.push_back("graph is not connected");
  return out;
}

/// Relative snapping tolerance: points closer than this fraction of the
/// bounding-box diagonal are the same node.
inline constexpr double kSnapTolerance = 1e-7;

/// Turns validated slum geometry into a planar graph. Polygon vertices become
/// nodes, polygon sides become edges (one per shared side), polygons become faces.
inline PlanarGraph build_planar_graph(const SlumGeometry& g) {
  BoundingBox box = bounds(g.exterior);
  for (const Ring& r : g.places)
    for (const Point& p : r) box.extend(p);
  const double tol = kSnapTolerance * std::max(box.diagonal(), 1e-300);

  PlanarGraph out;
  // Spatial hash on a tol-sized grid; neighbours are checked so points that
  // straddle a cell border still snap.
  std::unordered_map<std::int64_t, std::vector<NodeId>> grid;
  auto cell_key = [&](std::int64_t cx, std::int64_t cy) { return cx * 73856093LL ^ cy * 19349663LL; };
  auto snap = [&](Point p) -> NodeId {
    const auto cx = static_cast<std::int64_t>(std::floor((p.x - box.min.x) / tol));
    const auto cy = static_cast<std::int64_t>(std::floor((p.y - box.min.y) / tol));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        auto it = grid.find(cell_key(cx + dx, cy + dy));
        if (it == grid.end()) continue;
        for (NodeId n : it->second)
          if (distance(out.nodes[n], p) <= tol) return n;
      }
    const auto id = static_cast<NodeId>(out.nodes.size());
    out.nodes.push_back(p);
    grid[cell_key(cx, cy)].push_back(id);
    return id;
  };

  std::map<std::pair<NodeId, NodeId>, EdgeId> edge_index;
  for (std::size_t pi = 0; pi < g.places.size(); ++pi) {
    std::vector<NodeId> cycle;
    for (const Point& p : g.places[pi]) {
      const NodeId n = snap(p);
      if (cycle.empty() || cycle.back() != n) cycle.push_back(n);
    }
    while (cycle.size() > 1 && cycle.front() == cycle.back()) cycle.pop_back();
    if (cycle.size() < 3)
      throw TopologyError("place " + std::to_string(pi) + " collapses to fewer than 3 nodes");
    Face face;
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      NodeId a = cycle[i], b = cycle[(i + 1) % cycle.size()];
      const auto key = std::minmax(a, b);
      auto [it, inserted] = edge_index.try_emplace({key.first, key.second}, static_cast<EdgeId>(out.edges.size()));
      if (inserted) {
        Edge e;
        e.a = key.first;
        e.b = key.second;
        e.length = distance(out.nodes[e.a], out.nodes[e.b]);
        e.cost = e.length;
        e.polyline = {out.nodes[e.a], out.nodes[e.b]};
        out.edges.push_back(std::move(e));
      }
      face.edges.push_back(it->second);
    }
    out.faces.push_back(std::move(face));
  }

  for (Edge& e : out.edges) {
    const Point pa = out.nodes[e.a], pb = out.nodes[e.b];
    const Point mid = (pa + pb) * 0.5;
    if (geom::on_ring_boundary(pa, g.exterior, tol) && geom::on_ring_boundary(pb, g.exterior, tol) &&
        geom::on_ring_boundary(mid, g.exterior, tol)) {
      e.exterior = true;
      e.road = true;
    }
  }
  out.finalize();
  return out;
}

/// Result of simplify(): the reduced graph plus, for each of its edges and
/// nodes, the ids in the input graph they stand for.
struct SimplifyResult {
  PlanarGraph graph;
  std::vector<std::vector<EdgeId>> edge_origin;
  std::vector<std::vector<NodeId>> node_origin;
};

namespace detail {

struct UnionFind {
  std::vector<std::int32_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::int32_t find(std::int32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  // The smaller id always becomes the root.
  bool unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent[b] = a;
    return true;
  }
};

inline double polyline_length(const std::vector<Point>& pl) {
  double s = 0.0;
  for (std::size_t i = 1; i < pl.size(); ++i) s += distance(pl[i - 1], pl[i]);
  return s;
}

struct WorkEdge {
  Edge edge;
  std::vector<EdgeId> origin;
  bool alive = true;
};

inline void degenerate_check(const std::vector<std::vector<EdgeId>>& faces) {
  for (std::size_t f = 0; f < faces.size(); ++f) {
    std::vector<EdgeId> u = faces[f];
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    if (u.size() < 3)
      throw TopologyError("simplification collapses face " + std::to_string(f) + " to zero area");
  }
}

}  // namespace detail

/// Merges nodes closer than merge_eps, collapses parallel duplicate edges,
/// and dissolves degree-2 nodes (their two edges become one, costs added).
inline SimplifyResult simplify(const PlanarGraph& g, double merge_eps) {
  const std::size_t nn = g.nodes.size();
  std::vector<Point> pos = g.nodes;
  std::vector<char> node_alive(nn, 1);
  std::vector<std::vector<NodeId>> node_origin(nn);
  for (std::size_t i = 0; i < nn; ++i) node_origin[i] = {static_cast<NodeId>(i)};

  std::vector<detail::WorkEdge> work;
  work.reserve(g.edges.size());
  for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) work.push_back({g.edges[e], {e}, true});
  std::vector<std::vector<EdgeId>> faces;
  for (const Face& f : g.faces) faces.push_back(f.edges);

  auto replace_in_faces = [&](EdgeId from, EdgeId to) {
    for (auto& cyc : faces)
      for (EdgeId& e : cyc)
        if (e == from) e = to;
  };
  auto erase_from_faces = [&](EdgeId e) {
    for (auto& cyc : faces) cyc.erase(std::remove(cyc.begin(), cyc.end(), e), cyc.end());
  };
  auto dedupe_consecutive = [&]() {
    for (auto& cyc : faces) {
      std::vector<EdgeId> out;
      for (EdgeId e : cyc)
        if (out.empty() || out.back() != e) out.push_back(e);
      while (out.size() > 1 && out.front() == out.back()) out.pop_back();
      cyc = std::move(out);
    }
  };

  bool changed = true;
  while (changed) {
    changed = false;

    // 1. Node clusters within merge_eps (transitively), represented by the lowest id.
    detail::UnionFind uf(nn);
    bool merged = false;
    for (std::size_t i = 0; i < nn; ++i) {
      if (!node_alive[i]) continue;
      for (std::size_t j = i + 1; j < nn; ++j) {
        if (node_alive[j] && distance(pos[i], pos[j]) < merge_eps)
          merged |= uf.unite(static_cast<std::int32_t>(i), static_cast<std::int32_t>(j));
      }
    }
    if (merged) {
      changed = true;
      for (std::size_t i = 0; i < nn; ++i) {
        if (!node_alive[i]) continue;
        const auto r = static_cast<std::size_t>(uf.find(static_cast<std::int32_t>(i)));
        if (r != i) {
          node_alive[i] = 0;
          node_origin[r].insert(node_origin[r].end(), node_origin[i].begin(), node_origin[i].end());
          node_origin[i].clear();
        }
      }
      for (EdgeId e = 0; e < static_cast<EdgeId>(work.size()); ++e) {
        auto& w = work[e];
        if (!w.alive) continue;
        w.edge.a = uf.find(w.edge.a);
        w.edge.b = uf.find(w.edge.b);
        w.edge.polyline.front() = pos[w.edge.a];
        w.edge.polyline.back() = pos[w.edge.b];
        w.edge.length = detail::polyline_length(w.edge.polyline);
        if (w.edge.a == w.edge.b) {
          w.alive = false;
          erase_from_faces(e);
        }
      }
    }

    // 2. Parallel duplicates collapse onto the lowest edge id.
    std::map<std::pair<NodeId, NodeId>, EdgeId> seen;
    for (EdgeId e = 0; e < static_cast<EdgeId>(work.size()); ++e) {
      auto& w = work[e];
      if (!w.alive) continue;
      const auto key = std::minmax(w.edge.a, w.edge.b);
      auto [it, inserted] = seen.try_emplace({key.first, key.second}, e);
      if (inserted) continue;
      auto& keep = work[it->second];
      keep.edge.road = keep.edge.road || w.edge.road;
      keep.edge.exterior = keep.edge.exterior || w.edge.exterior;
      keep.origin.insert(keep.origin.end(), w.origin.begin(), w.origin.end());
      w.alive = false;
      replace_in_faces(e, it->second);
      changed = true;
    }
    dedupe_consecutive();
    detail::degenerate_check(faces);

    // 3. Degree-2 nodes dissolve into a single edge.
    std::vector<std::vector<EdgeId>> incident(nn);
    for (EdgeId e = 0; e < static_cast<EdgeId>(work.size()); ++e) {
      if (!work[e].alive) continue;
      incident[work[e].edge.a].push_back(e);
      incident[work[e].edge.b].push_back(e);
    }
    auto faces_of = [&](EdgeId e) {
      std::vector<std::size_t> fs;
      for (std::size_t f = 0; f < faces.size(); ++f)
        if (std::find(faces[f].begin(), faces[f].end(), e) != faces[f].end()) fs.push_back(f);
      return fs;
    };
    for (std::size_t v = 0; v < nn; ++v) {
      if (!node_alive[v] || incident[v].size() != 2) continue;
      const EdgeId e1 = incident[v][0], e2 = incident[v][1];
      auto& w1 = work[e1];
      auto& w2 = work[e2];
      const NodeId u = w1.edge.other(static_cast<NodeId>(v));
      const NodeId w = w2.edge.other(static_cast<NodeId>(v));
      if (u == w) continue;
      if (w1.edge.road != w2.edge.road || w1.edge.exterior != w2.edge.exterior) continue;
      const auto key = std::minmax(u, w);
      bool exists = false;
      for (EdgeId e : incident[u])
        if (work[e].alive && std::minmax(work[e].edge.a, work[e].edge.b) == key) exists = true;
      if (exists) continue;
      if (faces_of(e1) != faces_of(e2)) continue;

      const EdgeId keep_id = std::min(e1, e2), drop_id = std::max(e1, e2);
      // Orient both polylines u -> v -> w.
      std::vector<Point> left = w1.edge.polyline, right = w2.edge.polyline;
      if (w1.edge.b != static_cast<NodeId>(v)) std::reverse(left.begin(), left.end());
      if (w2.edge.a != static_cast<NodeId>(v)) std::reverse(right.begin(), right.end());
      left.insert(left.end(), right.begin() + 1, right.end());
      Edge merged_edge = w1.edge;
      merged_edge.a = u;
      merged_edge.b = w;
      merged_edge.length = w1.edge.length + w2.edge.length;
      merged_edge.cost = w1.edge.cost + w2.edge.cost;
      merged_edge.polyline = std::move(left);
      std::vector<EdgeId> origin = w1.origin;
      origin.insert(origin.end(), w2.origin.begin(), w2.origin.end());

      work[keep_id].edge = std::move(merged_edge);
      work[keep_id].origin = std::move(origin);
      work[drop_id].alive = false;
      erase_from_faces(drop_id);
      node_alive[v] = 0;
      node_origin[v].clear();
      // Keep the incidence lists current for later nodes in this sweep.
      for (NodeId end : {u, w}) {
        auto& inc = incident[end];
        inc.erase(std::remove(inc.begin(), inc.end(), drop_id), inc.end());
        if (std::find(inc.begin(), inc.end(), keep_id) == inc.end()) inc.push_back(keep_id);
      }
      incident[v].clear();
      changed = true;
    }
    detail::degenerate_check(faces);
  }

  // Compact ids in input order.
  SimplifyResult result;
  std::vector<NodeId> node_map(nn, -1);
  for (std::size_t i = 0; i < nn; ++i) {
    if (!node_alive[i]) continue;
    node_map[i] = static_cast<NodeId>(result.graph.nodes.size());
    result.graph.nodes.push_back(pos[i]);
    result.node_origin.push_back(node_origin[i]);
  }
  std::vector<EdgeId> edge_map(work.size(), -1);
  for (EdgeId e = 0; e < static_cast<EdgeId>(work.size()); ++e) {
    if (!work[e].alive) continue;
    Edge ed = work[e].edge;
    ed.a = node_map[ed.a];
    ed.b = node_map[ed.b];
    if (ed.a > ed.b) {
      std::swap(ed.a, ed.b);
      std::reverse(ed.polyline.begin(), ed.polyline.end());
    }
    edge_map[e] = static_cast<EdgeId>(result.graph.edges.size());
    result.graph.edges.push_back(std::move(ed));
    auto origin = work[e].origin;
    std::sort(origin.begin(), origin.end());
    result.edge_origin.push_back(std::move(origin));
  }
  for (const auto& cyc : faces) {
    Face f;
    for (EdgeId e : cyc) f.edges.push_back(edge_map[e]);
    result.graph.faces.push_back(std::move(f));
  }
  result.graph.finalize();
  return result;
}

/// Translates the bounding-box minimum to the origin and divides every
/// coordinate, length and cost by the mean edge length.
inline PlanarGraph normalize(const PlanarGraph& g) {
  if (g.edges.empty()) throw DomainError("normalize requires at least one edge");
  BoundingBox box;
  for (const Point& p : g.nodes) box.extend(p);
  const double mean = g.mean_edge_length();
  if (!(mean > 0.0)) throw DomainError("mean edge length is zero");
  const double inv = 1.0 / mean;
  PlanarGraph out = g;
  auto tf = [&](Point p) { return Point{(p.x - box.min.x) * inv, (p.y - box.min.y) * inv}; };
  for (Point& p : out.nodes) p = tf(p);
  for (Edge& e : out.edges) {
    e.length *= inv;
    e.cost *= inv;
    for (Point& p : e.polyline) p = tf(p);
  }
  return out;
}

/// log10 of binomial(n, k): the number of distinct k-segment plans.
inline double solution_space_log10(std::int64_t n, std::int64_t k) {
  if (n < 0 || k < 0 || k > n) throw DomainError("solution_space_log10 requires 0 <= k <= n");
  const double ln = std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
                    std::lgamma(static_cast<double>(n - k) + 1.0);
  return ln / std::log(10.0);
}

/// Options for turning an ingested graph into the environment graph.
struct PrepareOptions {
  bool simplify = true;
  double merge_eps_ratio = 0.02;  // x mean edge length
  bool normalize = true;
};

struct PreparedGraph {
  PlanarGraph graph;
  std::vector<std::vector<EdgeId>> edge_origin;  // into the unsimplified graph
};

inline PreparedGraph prepare_graph(const PlanarGraph& built, const PrepareOptions& opt = {}) {
  PreparedGraph out;
  if (opt.simplify) {
    auto s = simplify(built, opt.merge_eps_ratio * built.mean_edge_length());
    out.graph = std::move(s.graph);
    out.edge_origin = std::move(s.edge_origin);
  } else {
    out.graph = built;
    for (EdgeId e = 0; e < static_cast<EdgeId>(built.edges.size()); ++e) out.edge_origin.push_back({e});
  }
  if (opt.normalize) out.graph = normalize(out.graph);
  return out;
}

// ---------------------------------------------------------------------------
// Graph document: {"format": "slumroad-graph", "version": 1, "nodes": [[x,y]],
//   "edges": [{"endpoints": [a,b], "cost", "road", "exterior", "length"?, "polyline"?}],
//   "faces": [{"edges": [...]}]}

inline nlohmann::json to_json(const PlanarGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const Point& p : g.nodes) nodes.push_back({p.x, p.y});
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges) {
    nlohmann::json pl = nlohmann::json::array();
    for (const Point& p : e.polyline) pl.push_back({p.x, p.y});
    edges.push_back({{"endpoints", {e.a, e.b}},
                     {"length", e.length},
                     {"cost", e.cost},
                     {"road", e.road},
                     {"exterior", e.exterior},
                     {"polyline", pl}});
  }
  nlohmann::json faces = nlohmann::json::array();
  for (const Face& f : g.faces) faces.push_back({{"edges", f.edges}});
  return {{"format", "slumroad-graph"}, {"version", 1}, {"nodes", nodes}, {"edges", edges}, {"faces", faces}};
}

inline PlanarGraph graph_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", "") != "slumroad-graph") throw ParseError("not a slumroad-graph document");
    PlanarGraph g;
    for (const auto& n : doc.at("nodes")) g.nodes.push_back({n.at(0).get<double>(), n.at(1).get<double>()});
    for (const auto& je : doc.at("edges")) {
      Edge e;
      e.a = je.at("endpoints").at(0).get<NodeId>();
      e.b = je.at("endpoints").at(1).get<NodeId>();
      if (e.a < 0 || e.b < 0 || static_cast<std::size_t>(e.a) >= g.nodes.size() ||
          static_cast<std::size_t>(e.b) >= g.nodes.size())
        throw TopologyError("edge endpoint out of range");
      const double euclid = distance(g.nodes[e.a], g.nodes[e.b]);
      e.length = je.value("length", euclid);
      e.cost = je.value("cost", e.length);
      // A road at load time is part of the pre-existing network.
      e.road = je.value("road", false) || je.value("exterior", false);
      e.exterior = e.road;
      if (je.contains("polyline")) {
        for (const auto& p : je["polyline"]) e.polyline.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      if (e.polyline.size() < 2) e.polyline = {g.nodes[e.a], g.nodes[e.b]};
      if (e.length < 0.0 || e.cost < 0.0) throw ParseError("negative edge length or cost");
      g.edges.push_back(std::move(e));
    }
    for (const auto& jf : doc.at("faces")) {
      Face f;
      f.edges = jf.at("edges").get<std::vector<EdgeId>>();
      g.faces.push_back(std::move(f));
    }
    g.finalize();
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed graph document: ") + e.what());
  }
}

}  // namespace slumroad
