#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "test_support.hpp"

using namespace slumroad;
namespace ts = testing_support;

namespace {

/// Applies the candidates in a seeded random order, calling `check` after each.
template <class Check>
void random_build(const std::shared_ptr<const SlumContext>& ctx, std::uint64_t seed, std::size_t steps, Check&& check) {
  SlumGraph s(ctx);
  std::vector<EdgeId> order = ctx->candidates;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  check(s);
  for (std::size_t i = 0; i < std::min(steps, order.size()); ++i) {
    s.set_road(order[i]);
    check(s);
  }
}

}  // namespace

TEST(Context, SentinelIsTwiceTheDiameter) {
  const auto ctx = ts::grid(3, 3);
  const auto d = ts::floyd_warshall(ctx->graph, [](EdgeId) { return true; });
  double diameter = 0.0;
  for (const auto& row : d)
    for (double v : row) diameter = std::max(diameter, v);
  EXPECT_NEAR(ctx->diameter, diameter, 1e-12);
  EXPECT_NEAR(ctx->sentinel, 2.0 * diameter, 1e-12);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d.size(); ++j) EXPECT_NEAR(ctx->full_dist(i, j), d[i][j], 1e-12);
}

TEST(Context, CandidatesAreTheNonExteriorEdges) {
  const auto ctx = ts::grid(2, 3, 0.2, 4);
  std::size_t count = 0;
  for (EdgeId e = 0; e < static_cast<EdgeId>(ctx->graph.edges.size()); ++e) {
    const bool cand = std::find(ctx->candidates.begin(), ctx->candidates.end(), e) != ctx->candidates.end();
    EXPECT_EQ(cand, !ctx->graph.edges[e].exterior);
    count += cand;
  }
  EXPECT_EQ(count, ctx->graph.num_candidates());
}

TEST(SlumGraph, ResetStateOnGrid) {
  const auto ctx = ts::grid(3, 3);
  SlumGraph s(ctx);
  EXPECT_EQ(s.connected_count(), 8u);
  EXPECT_FALSE(s.universally_connected());
  EXPECT_TRUE(s.planned().empty());
  EXPECT_FALSE(s.connectivity_step().has_value());
  for (EdgeId e = 0; e < static_cast<EdgeId>(ctx->graph.edges.size()); ++e)
    EXPECT_EQ(s.road(e), ctx->graph.edges[e].exterior);
}

TEST(SlumGraph, OppositeCornerPlacesOverThePerimeter) {
  const auto ctx = ts::grid(3, 3);
  SlumGraph s(ctx);
  // Corner places are faces 0 (bottom-left) and 8 (top-right) of the lattice.
  // Nearest perimeter nodes are 4 units apart; one unit is 1/1.2 after scaling.
  EXPECT_NEAR(s.face_distance(0, 8), 4.0 / 1.2, 1e-12);
  EXPECT_NEAR(s.face_distance(0, 1), 0.0, 1e-12);  // neighbours share a perimeter node
  EXPECT_EQ(s.face_distance(0, 4), s.sentinel());  // the centre place is unconnected
  EXPECT_EQ(s.face_distance(4, 4), 0.0);
}

TEST(SlumGraph, IncrementalDistancesMatchFloydWarshall) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto ctx = ts::grid(3, 2 + static_cast<int>(seed % 3), 0.3, seed);
    const PlanarGraph& g = ctx->graph;
    random_build(ctx, seed, g.num_candidates(), [&](const SlumGraph& s) {
      const auto d = ts::floyd_warshall(g, [&](EdgeId e) { return s.road(e); });
      for (NodeId a = 0; a < static_cast<NodeId>(g.nodes.size()); ++a)
        for (NodeId b = 0; b < static_cast<NodeId>(g.nodes.size()); ++b) {
          const double want = d[a][b], got = s.node_distance(a, b);
          if (want == ts::kInfD) ASSERT_EQ(got, ts::kInfD);
          else ASSERT_NEAR(got, want, 1e-12);
        }
      for (FaceId u = 0; u < static_cast<FaceId>(g.faces.size()); ++u)
        for (FaceId v = 0; v < static_cast<FaceId>(g.faces.size()); ++v)
          ASSERT_NEAR(s.face_distance(u, v), ts::reference_face_distance(s, d, u, v), 1e-12);
    });
  }
}

TEST(SlumGraph, DetourLongerThanSentinelIsCapped) {
  // Roads built off the network first; joining them yields a road distance
  // between places 6 and 7 longer than twice the all-edge diameter.
  const auto ctx = ts::grid(3, 5, 0.25, 3);
  SlumGraph s(ctx);
  const PlanarGraph& g = ctx->graph;
  double before = s.face_distance(6, 7);
  for (EdgeId e : {11, 21, 2, 24}) {
    s.set_road(e);
    const double now = s.face_distance(6, 7);
    EXPECT_LE(now, before);
    EXPECT_LE(now, s.sentinel());
    before = now;
  }
  const auto d = ts::floyd_warshall(g, [&](EdgeId e) { return s.road(e); });
  double raw = ts::kInfD;
  for (NodeId a : s.access(6))
    for (NodeId b : s.access(7)) raw = std::min(raw, d[a][b]);
  EXPECT_GT(raw, s.sentinel());
  EXPECT_EQ(s.face_distance(6, 7), s.sentinel());
}

TEST(SlumGraph, ConnectedMeansTouchingARoadNode) {
  const auto ctx = ts::grid(4, 4, 0.25, 3);
  const PlanarGraph& g = ctx->graph;
  random_build(ctx, 11, 12, [&](const SlumGraph& s) {
    std::size_t count = 0;
    for (FaceId f = 0; f < static_cast<FaceId>(g.faces.size()); ++f) {
      bool touch = false;
      for (NodeId v : g.face_nodes[f]) touch |= s.on_road(v);
      EXPECT_EQ(s.connected(f), touch);
      count += touch;
      std::vector<NodeId> access;
      for (NodeId v : g.face_nodes[f])
        if (s.on_road(v)) access.push_back(v);
      EXPECT_EQ(s.access(f), access);
    }
    EXPECT_EQ(s.connected_count(), count);
  });
}

TEST(SlumGraph, SetRoadRejectsBadEdges) {
  const auto ctx = ts::grid(2, 2);
  SlumGraph s(ctx);
  EXPECT_THROW(s.set_road(-1), InvalidAction);
  EXPECT_THROW(s.set_road(static_cast<EdgeId>(ctx->graph.edges.size())), InvalidAction);
  EdgeId exterior = 0;
  while (!ctx->graph.edges[exterior].exterior) ++exterior;
  EXPECT_THROW(s.set_road(exterior), InvalidAction);
  s.set_road(ctx->candidates[0]);
  EXPECT_THROW(s.set_road(ctx->candidates[0]), InvalidAction);
}

TEST(SlumGraph, MetricsTrackPlan) {
  const auto ctx = ts::grid(3, 3);
  SlumGraph s(ctx);
  double cost = 0.0;
  int step = 0;
  std::optional<int> first_universal;
  for (EdgeId e : ctx->candidates) {
    s.set_road(e);
    cost += ctx->graph.edges[e].cost;
    ++step;
    if (!first_universal && s.universally_connected()) first_universal = step;
    const Metrics m = s.metrics();
    EXPECT_NEAR(m.sc, cost, 1e-12);
    EXPECT_EQ(m.nr, first_universal);
    EXPECT_EQ(m.universal, s.universally_connected());
    EXPECT_NEAR(m.ad, s.average_face_distance(), 0.0);
  }
  EXPECT_TRUE(s.universally_connected());
}

TEST(SlumGraph, AverageFaceDistanceIsPairMean) {
  const auto ctx = ts::grid(2, 3, 0.1, 2);
  SlumGraph s(ctx);
  s.set_road(ctx->candidates[1]);
  const auto nf = static_cast<FaceId>(ctx->graph.faces.size());
  double sum = 0.0;
  int pairs = 0;
  for (FaceId u = 0; u < nf; ++u)
    for (FaceId v = u + 1; v < nf; ++v, ++pairs) sum += s.face_distance(u, v);
  EXPECT_NEAR(s.average_face_distance(), sum / pairs, 1e-12);
}

TEST(SlumGraph, HouseIsConnectedAtReset) {
  const auto ctx = load_context(ts::house(), {false, 0.02, false}, "house");
  SlumGraph s(ctx);
  EXPECT_TRUE(s.universally_connected());
  EXPECT_EQ(s.connectivity_step(), 0);
  EXPECT_EQ(ctx->candidates.size(), 1u);
}

// ---------------------------------------------------------------------------
// Feature tables

TEST(Features, ShapesAndStaticColumns) {
  const auto ctx = ts::grid(3, 3);
  const SlumGraph s(ctx);
  const FeatureSet fs = s.features();
  const PlanarGraph& g = ctx->graph;
  ASSERT_EQ(fs.node.rows(), g.num_nodes());
  ASSERT_EQ(fs.node.cols(), feature::kNodeDim);
  ASSERT_EQ(fs.edge.rows(), g.num_edges());
  ASSERT_EQ(fs.face.rows(), g.num_faces());
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    EXPECT_EQ(fs.node(v, feature::kX), g.nodes[v].x);
    EXPECT_EQ(fs.node(v, feature::kY), g.nodes[v].y);
    for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(fs.node(v, feature::kDegree + c), ctx->centrality(v, c));
    EXPECT_EQ(fs.node(v, feature::kOnRoad), s.on_road(static_cast<NodeId>(v)) ? 1.0 : 0.0);
  }
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    EXPECT_EQ(fs.edge(e, feature::kCost), g.edges[e].cost);
    EXPECT_EQ(fs.edge(e, feature::kRoad), g.edges[e].exterior ? 1.0 : 0.0);
  }
}

TEST(Features, DistanceColumnsOnGrid) {
  const auto ctx = ts::grid(3, 3);
  SlumGraph s(ctx);
  FeatureSet fs = s.features();
  const PlanarGraph& g = ctx->graph;
  const double big = ctx->sentinel;
  // The centre place: unconnected, sentinel distances.
  EXPECT_EQ(fs.face(4, feature::kConnected), 0.0);
  EXPECT_EQ(fs.face(4, feature::kAvgF2F), big);
  EXPECT_EQ(fs.face(4, feature::kF2E), big);
  // A perimeter place touches the exterior directly.
  EXPECT_EQ(fs.face(0, feature::kConnected), 1.0);
  EXPECT_EQ(fs.face(0, feature::kF2E), 0.0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edges[e];
    const bool both = s.on_road(ed.a) && s.on_road(ed.b);
    if (!both) {
      EXPECT_EQ(fs.edge(e, feature::kStraightness), big);
    }
    if (ed.exterior && ed.polyline.size() == 2) {
      EXPECT_NEAR(fs.edge(e, feature::kStraightness), 1.0, 1e-12);
    }
  }
  // Inner nodes are off-road.
  for (std::size_t v = 0; v < g.num_nodes(); ++v)
    if (!s.on_road(static_cast<NodeId>(v))) {
      EXPECT_EQ(fs.node(v, feature::kRoadRatio), 0.0);
      EXPECT_EQ(fs.node(v, feature::kAvgN2N), big);
    }

  // After a spoke is built its inner endpoint joins the network.
  EdgeId spoke = -1;
  for (EdgeId e : ctx->candidates)
    if (s.on_road(g.edges[e].a) != s.on_road(g.edges[e].b)) spoke = e;
  ASSERT_GE(spoke, 0);
  s.set_road(spoke);
  fs = s.features();
  const NodeId inner = s.on_road(g.edges[spoke].a) && ctx->exterior_node[g.edges[spoke].a] ? g.edges[spoke].b : g.edges[spoke].a;
  EXPECT_EQ(fs.node(inner, feature::kOnRoad), 1.0);
  EXPECT_NEAR(fs.node(inner, feature::kRoadRatio), 1.0 / static_cast<double>(g.node_edges[inner].size()), 1e-12);
  EXPECT_EQ(fs.edge(spoke, feature::kRoad), 1.0);
  EXPECT_NEAR(fs.edge(spoke, feature::kStraightness), 1.0, 1e-12);
  EXPECT_EQ(fs.face(4, feature::kConnected), 1.0);
  EXPECT_NEAR(fs.face(4, feature::kF2E), g.edges[spoke].length, 1e-12);
}

TEST(Features, AverageNodeDistanceOverRoadNodes) {
  const auto ctx = ts::grid(2, 2, 0.2, 8);
  SlumGraph s(ctx);
  s.set_road(ctx->candidates[0]);
  const FeatureSet fs = s.features();
  const PlanarGraph& g = ctx->graph;
  const auto d = ts::floyd_warshall(g, [&](EdgeId e) { return s.road(e); });
  for (NodeId v = 0; v < static_cast<NodeId>(g.num_nodes()); ++v) {
    if (!s.on_road(v)) continue;
    double sum = 0.0;
    int count = 0;
    for (NodeId w = 0; w < static_cast<NodeId>(g.num_nodes()); ++w)
      if (w != v && s.on_road(w)) {
        sum += std::min(d[v][w], ctx->sentinel);
        ++count;
      }
    EXPECT_NEAR(fs.node(v, feature::kAvgN2N), sum / count, 1e-12);
  }
}
