#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace slumroad;
namespace ts = testing_support;

namespace {

ModelConfig small_model(std::size_t d = 3, std::size_t layers = 2) {
  ModelConfig c;
  c.embed_dim = d;
  c.layers = layers;
  c.policy_hidden = 4;
  c.value_hidden = 4;
  return c;
}

/// Straight-line re-statement of the network used as an independent oracle.
struct Reference {
  std::vector<double> scores;
  double value = 0.0;
};

Reference reference_forward(const Params& p, const PlanarGraph& g, const FeatureSet& fs, Stage stage) {
  const std::size_t d = p.config.embed_dim, nn = g.num_nodes(), ne = g.num_edges(), nf = g.num_faces();
  auto lin = [](const Matrix& w, const std::vector<double>& x, std::size_t r) {
    double s = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) s += w(r, c) * x[c];
    return s;
  };
  auto row = [](const Matrix& m, std::size_t i) { return std::vector<double>(m.row(i).begin(), m.row(i).end()); };
  std::vector<std::vector<double>> node(nn, std::vector<double>(d)), edge0(ne, std::vector<double>(d)),
      face0(nf, std::vector<double>(d));
  for (std::size_t i = 0; i < nn; ++i)
    for (std::size_t k = 0; k < d; ++k) node[i][k] = lin(p.node_embed, row(fs.node, i), k);
  for (std::size_t i = 0; i < ne; ++i)
    for (std::size_t k = 0; k < d; ++k) edge0[i][k] = lin(p.edge_embed, row(fs.edge, i), k);
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t k = 0; k < d; ++k) face0[i][k] = lin(p.face_embed, row(fs.face, i), k);
  std::vector<std::vector<double>> edge = edge0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const LayerParams& lp = p.layers[l];
    for (std::size_t e = 0; e < ne; ++e) {
      std::vector<double> cat;
      std::vector<double> pair = node[g.edges[e].a];
      pair.insert(pair.end(), node[g.edges[e].b].begin(), node[g.edges[e].b].end());
      for (std::size_t k = 0; k < d; ++k) cat.push_back(p.config.node_to_edge ? std::tanh(lin(lp.node_to_edge, pair, k)) : 0.0);
      for (std::size_t k = 0; k < d; ++k) {
        double s = 0.0;
        for (FaceId f : g.edge_faces[e]) s += face0[f][k];
        cat.push_back(p.config.face_to_edge && !g.edge_faces[e].empty()
                          ? std::tanh(s / static_cast<double>(g.edge_faces[e].size()))
                          : 0.0);
      }
      for (std::size_t k = 0; k < d; ++k) cat.push_back(p.config.edge_self ? std::tanh(edge0[e][k]) : 0.0);
      for (std::size_t k = 0; k < d; ++k) edge[e][k] = std::tanh(lp.integrate_bias(k, 0) + lin(lp.integrate, cat, k));
    }
    for (std::size_t v = 0; v < nn; ++v)
      for (EdgeId e : g.node_edges[v])
        for (std::size_t k = 0; k < d; ++k) node[v][k] += edge[e][k] / static_cast<double>(g.node_edges[v].size());
  }
  const bool relu = p.config.head_activation == HeadActivation::kRelu;
  auto act = [&](double z) { return relu ? (z > 0.0 ? z : 0.0) : std::tanh(z); };
  auto bias = [&](const Matrix& b, std::size_t h) { return p.config.head_bias ? b(h, 0) : 0.0; };
  Reference out;
  for (std::size_t e = 0; e < ne; ++e) {
    double s = bias(p.policy_b2, 0);
    for (std::size_t h = 0; h < p.config.policy_hidden; ++h)
      s += p.policy_w2(0, h) * act(bias(p.policy_b1, h) + lin(p.policy_w1, edge[e], h));
    out.scores.push_back(s);
  }
  std::vector<double> in(2 * d + 2, 0.0);
  for (std::size_t k = 0; k < d; ++k) {
    for (std::size_t v = 0; v < nn; ++v) in[k] += node[v][k] / static_cast<double>(nn);
    for (std::size_t e = 0; e < ne; ++e) in[d + k] += edge[e][k] / static_cast<double>(ne);
  }
  in[2 * d + (stage == Stage::kConnect ? 0 : 1)] = 1.0;
  const std::size_t vh = p.config.value_hidden;
  std::vector<double> h1(vh), h2(vh);
  for (std::size_t h = 0; h < vh; ++h) h1[h] = act(bias(p.value_b1, h) + lin(p.value_w1, in, h));
  for (std::size_t h = 0; h < vh; ++h) h2[h] = act(bias(p.value_b2, h) + lin(p.value_w2, h1, h));
  out.value = bias(p.value_b3, 0);
  for (std::size_t h = 0; h < vh; ++h) out.value += p.value_w3(0, h) * h2[h];
  return out;
}

/// Scalar test loss L = sum_k c_k s_k + c_v V with fixed random weights.
struct ProbeLoss {
  std::vector<double> c;
  double cv = 0.0;
  double operator()(const ForwardPass& fp) const {
    double s = cv * fp.value;
    for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * fp.scores[k];
    return s;
  }
};

double max_gradient_error(const std::shared_ptr<const SlumContext>& ctx, const ModelConfig& cfg, std::uint64_t seed,
                          std::size_t roads) {
  SlumGraph s(ctx);
  for (std::size_t i = 0; i < roads && i < ctx->candidates.size(); ++i) s.set_road(ctx->candidates[i]);
  const FeatureSet fs = s.features();
  const Topology topo = make_topology(ctx->graph);
  Params p = ts::random_params(cfg, seed, 0.6);
  std::mt19937_64 rng(seed * 31 + 7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ProbeLoss loss;
  for (std::size_t e = 0; e < ctx->graph.num_edges(); ++e) loss.c.push_back(u(rng));
  loss.cv = u(rng);
  const Stage stage = seed % 2 ? Stage::kConnect : Stage::kShorten;

  Params grads = zeros_like(p);
  const ForwardPass fp = forward(p, topo, fs, stage);
  backward(p, topo, fp, loss.c, loss.cv, grads);

  std::vector<Matrix*> ps;
  std::vector<const Matrix*> gs;
  p.for_each([&](const std::string&, Matrix& m) { ps.push_back(&m); });
  grads.for_each([&](const std::string&, const Matrix& m) { gs.push_back(&m); });
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    for (std::size_t k = 0; k < ps[i]->size(); ++k) {
      double& x = ps[i]->values()[k];
      const double keep = x;
      x = keep + h;
      const double up = loss(forward(p, topo, fs, stage));
      x = keep - h;
      const double down = loss(forward(p, topo, fs, stage));
      x = keep;
      const double fd = (up - down) / (2 * h);
      const double an = gs[i]->values()[k];
      worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6}));
    }
  }
  return worst;
}

}  // namespace

TEST(Forward, HandComputedSingleUnitNetwork) {
  ModelConfig cfg;
  cfg.embed_dim = 1;
  cfg.layers = 0;
  cfg.policy_hidden = 1;
  cfg.value_hidden = 1;
  Params p = zero_params(cfg);
  p.edge_embed(0, feature::kCost) = 0.5;
  p.policy_w1(0, 0) = 2.0;
  p.policy_b1(0, 0) = -0.1;
  p.policy_w2(0, 0) = 3.0;
  p.policy_b2(0, 0) = 0.25;
  p.value_b3(0, 0) = -1.5;
  const auto ctx = ts::grid(3, 3);
  const FeatureSet fs = SlumGraph(ctx).features();
  const ForwardPass fp = forward(p, make_topology(ctx->graph), fs, Stage::kConnect);
  for (std::size_t e = 0; e < ctx->graph.num_edges(); ++e) {
    const double c = ctx->graph.edges[e].cost;
    EXPECT_NEAR(fp.scores[e], 0.25 + 3.0 * std::tanh(2.0 * 0.5 * c - 0.1), 1e-14);
  }
  EXPECT_NEAR(fp.value, -1.5, 1e-15);
}

TEST(Forward, ZeroParametersGiveUniformPolicy) {
  const auto ctx = ts::grid(3, 3);
  const Params p = zero_params(small_model());
  const ForwardPass fp = forward(p, make_topology(ctx->graph), SlumGraph(ctx).features(), Stage::kConnect);
  for (double s : fp.scores) EXPECT_EQ(s, 0.0);
  EXPECT_EQ(fp.value, 0.0);
}

TEST(Forward, MatchesReferenceImplementation) {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const auto ctx = ts::grid(2, 3, 0.2, seed);
    ModelConfig cfg = small_model(3, 1 + seed % 3);
    cfg.node_to_edge = seed != 4;
    cfg.face_to_edge = seed != 5;
    cfg.edge_self = seed != 6;
    const Params p = ts::random_params(cfg, seed);
    SlumGraph s(ctx);
    s.set_road(ctx->candidates[seed % ctx->candidates.size()]);
    const FeatureSet fs = s.features();
    const Stage stage = seed % 2 ? Stage::kConnect : Stage::kShorten;
    const ForwardPass fp = forward(p, make_topology(ctx->graph), fs, stage);
    const Reference ref = reference_forward(p, ctx->graph, fs, stage);
    for (std::size_t e = 0; e < ref.scores.size(); ++e) EXPECT_NEAR(fp.scores[e], ref.scores[e], 1e-12);
    EXPECT_NEAR(fp.value, ref.value, 1e-12);
  }
}

TEST(Forward, HeadVariantsMatchReference) {
  const auto ctx = ts::grid(2, 3, 0.2, 4);
  SlumGraph s(ctx);
  s.set_road(ctx->candidates[1]);
  const FeatureSet fs = s.features();
  for (int variant = 0; variant < 4; ++variant) {
    ModelConfig cfg = small_model(3, 2);
    cfg.head_bias = variant % 2 == 0;
    cfg.head_activation = variant < 2 ? HeadActivation::kTanh : HeadActivation::kRelu;
    const Params p = ts::random_params(cfg, 20 + variant);
    const ForwardPass fp = forward(p, make_topology(ctx->graph), fs, Stage::kShorten);
    const Reference ref = reference_forward(p, ctx->graph, fs, Stage::kShorten);
    for (std::size_t e = 0; e < ref.scores.size(); ++e) EXPECT_NEAR(fp.scores[e], ref.scores[e], 1e-12);
    EXPECT_NEAR(fp.value, ref.value, 1e-12);
  }
}

TEST(Forward, DisabledHeadBiasesAreIgnored) {
  const auto ctx = ts::grid(2, 2);
  ModelConfig cfg = small_model();
  cfg.head_bias = false;
  Params p = ts::random_params(cfg, 8);
  const auto topo = make_topology(ctx->graph);
  const FeatureSet fs = SlumGraph(ctx).features();
  const ForwardPass a = forward(p, topo, fs, Stage::kConnect);
  p.policy_b1.values().assign(p.policy_b1.size(), 3.0);
  p.value_b3(0, 0) = -7.0;
  const ForwardPass b = forward(p, topo, fs, Stage::kConnect);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_EQ(a.value, b.value);
}

TEST(Forward, StageChangesOnlyTheValue) {
  const auto ctx = ts::grid(2, 2);
  const Params p = ts::random_params(small_model(), 3);
  const auto topo = make_topology(ctx->graph);
  const FeatureSet fs = SlumGraph(ctx).features();
  const ForwardPass a = forward(p, topo, fs, Stage::kConnect), b = forward(p, topo, fs, Stage::kShorten);
  EXPECT_EQ(a.scores, b.scores);
  EXPECT_NE(a.value, b.value);
}

TEST(Forward, RejectsMismatchedFeatures) {
  const auto ctx = ts::grid(2, 2);
  const Params p = zero_params(small_model());
  const FeatureSet fs = SlumGraph(ts::grid(3, 3)).features();
  EXPECT_THROW(forward(p, make_topology(ctx->graph), fs, Stage::kConnect), ShapeError);
}

TEST(Forward, RejectsIsolatedNode) {
  PlanarGraph g = ts::grid(1, 2)->graph;
  g.nodes.push_back({9, 9});
  g.finalize();
  EXPECT_THROW(make_topology(g), IsolatedNodeError);
}

TEST(Backward, MatchesFiniteDifferences) {
  const std::vector<std::shared_ptr<const SlumContext>> graphs = {
      ts::grid(2, 2), ts::grid(1, 3), ts::grid(2, 2, 0.3, 5),
      load_context(ts::house(), {false, 0.02, true}, "house")};
  std::uint64_t seed = 1;
  for (const auto& ctx : graphs) {
    for (std::size_t roads = 0; roads < 2; ++roads, ++seed) {
      const double err = max_gradient_error(ctx, small_model(2, 2), seed, roads);
      EXPECT_LT(err, 1e-4) << ctx->id << " seed " << seed;
    }
  }
}

TEST(Backward, AblatedBranchesStillMatch) {
  const auto ctx = ts::grid(2, 2, 0.2, 9);
  for (int variant = 0; variant < 3; ++variant) {
    ModelConfig cfg = small_model(2, 2);
    cfg.node_to_edge = variant != 0;
    cfg.face_to_edge = variant != 1;
    cfg.edge_self = variant != 2;
    EXPECT_LT(max_gradient_error(ctx, cfg, 40 + variant, 1), 1e-4) << "variant " << variant;
  }
}

TEST(Backward, HeadVariantsStillMatch) {
  const auto ctx = ts::grid(2, 2, 0.2, 11);
  for (int variant = 0; variant < 3; ++variant) {
    ModelConfig cfg = small_model(2, 2);
    cfg.head_bias = variant != 0;
    cfg.head_activation = variant == 0 ? HeadActivation::kTanh : HeadActivation::kRelu;
    EXPECT_LT(max_gradient_error(ctx, cfg, 50 + variant, 1), 1e-4) << "variant " << variant;
  }
}

TEST(Backward, AccumulatesIntoBuffer) {
  const auto ctx = ts::grid(2, 2);
  const Params p = ts::random_params(small_model(), 2);
  const auto topo = make_topology(ctx->graph);
  const ForwardPass fp = forward(p, topo, SlumGraph(ctx).features(), Stage::kConnect);
  std::vector<double> ds(fp.scores.size(), 0.3);
  Params once = zeros_like(p), twice = zeros_like(p);
  backward(p, topo, fp, ds, 0.7, once);
  backward(p, topo, fp, ds, 0.7, twice);
  backward(p, topo, fp, ds, 0.7, twice);
  std::vector<double> a, b;
  once.for_each([&](const std::string&, const Matrix& m) { a.insert(a.end(), m.values().begin(), m.values().end()); });
  twice.for_each([&](const std::string&, const Matrix& m) { b.insert(b.end(), m.values().begin(), m.values().end()); });
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(b[i], 2 * a[i], 1e-12);
  EXPECT_THROW(backward(p, topo, ForwardPass{}, ds, 0.0, once), StateError);
  EXPECT_THROW(backward(p, topo, fp, std::vector<double>(1), 0.0, once), ShapeError);
}

// ---------------------------------------------------------------------------
// Masked distribution

TEST(Distribution, ContractHolds) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t len = 1 + trial % 30;
    std::vector<double> s(len);
    Mask m(len);
    for (std::size_t i = 0; i < len; ++i) {
      s[i] = n(rng);
      m[i] = (rng() % 3) != 0;
    }
    m[trial % len] = 1;
    const auto p = masked_distribution(s, m);
    double sum = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      if (!m[i]) {
        EXPECT_EQ(p[i], 0.0);
      }
      sum += p[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    std::vector<double> shifted = s;
    for (double& v : shifted) v += 123.456;
    const auto q = masked_distribution(shifted, m);
    for (std::size_t i = 0; i < len; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
    for (std::size_t i = 0; i < len; ++i)
      if (m[i]) {
        EXPECT_NEAR(log_prob(s, m, i), std::log(p[i]), 1e-12);
      }
  }
}

TEST(Distribution, ExtremeScoresStayFinite) {
  const std::vector<double> s = {1000.0, -1000.0, 999.0};
  const auto p = masked_distribution(s, Mask{1, 1, 1});
  EXPECT_NEAR(p[0], 1.0 / (1.0 + std::exp(-1.0)), 1e-12);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_TRUE(std::isfinite(log_prob(s, Mask{1, 1, 1}, 1)));
}

TEST(Distribution, EmptyMaskThrows) {
  EXPECT_THROW(masked_distribution(std::vector<double>{1, 2}, Mask{0, 0}), EmptyMaskError);
  EXPECT_THROW(greedy_action(std::vector<double>{1, 2}, Mask{0, 0}), EmptyMaskError);
  EXPECT_THROW(masked_distribution(std::vector<double>{1, 2}, Mask{1}), ShapeError);
}

TEST(Distribution, GreedyTiesGoToLowestId) {
  EXPECT_EQ(greedy_action(std::vector<double>{0.5, 2.0, 2.0, 9.0}, Mask{1, 1, 1, 0}), 1);
  EXPECT_EQ(greedy_action(std::vector<double>{3, 3, 3}, Mask{0, 1, 1}), 1);
}

TEST(Distribution, EntropyOfUniform) {
  const auto p = masked_distribution(std::vector<double>(7, 0.3), Mask(7, 1));
  EXPECT_NEAR(entropy(p), std::log(7.0), 1e-12);
}

TEST(Distribution, SamplingFrequenciesWithinThreeSigma) {
  const std::vector<double> s = {0.0, 1.0, -0.5, 2.0, 0.3};
  const Mask m = {1, 1, 0, 1, 1};
  const auto p = masked_distribution(s, m);
  std::mt19937_64 rng(2024);
  const int draws = 10000;
  std::vector<int> count(s.size(), 0);
  for (int i = 0; i < draws; ++i) ++count[sample_action(s, m, rng)];
  EXPECT_EQ(count[2], 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double mean = draws * p[i], sd = std::sqrt(draws * p[i] * (1 - p[i]));
    EXPECT_LE(std::abs(count[i] - mean), 3 * sd + 1e-9) << "edge " << i;
  }
}

// ---------------------------------------------------------------------------
// Parameters and checkpoints

TEST(Params, ShapesFollowConfig) {
  const ModelConfig cfg = small_model(4, 3);
  const Params p = zero_params(cfg);
  EXPECT_EQ(p.layers.size(), 3u);
  EXPECT_EQ(p.node_embed.rows(), 4u);
  EXPECT_EQ(p.node_embed.cols(), feature::kNodeDim);
  EXPECT_EQ(p.value_w1.cols(), 2 * 4 + 2u);
  const std::size_t expect = 4 * 9 + 4 * 3 + 4 * 3 + 3 * (4 * 8 + 4 * 12 + 4) + (4 * 4 + 4 + 4 + 1) +
                             (4 * 10 + 4 + 16 + 4 + 4 + 1);
  EXPECT_EQ(p.parameter_count(), expect);
}

TEST(Params, InitIsSeededAndBiasFree) {
  const ModelConfig cfg = small_model();
  EXPECT_EQ(init_params(cfg, 3), init_params(cfg, 3));
  EXPECT_NE(init_params(cfg, 3), init_params(cfg, 4));
  const Params p = init_params(cfg, 3);
  for (double v : p.policy_b1.values()) EXPECT_EQ(v, 0.0);
  for (double v : p.layers[0].integrate_bias.values()) EXPECT_EQ(v, 0.0);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  ModelConfig cfg = small_model(3, 2);
  cfg.face_to_edge = false;
  cfg.head_bias = false;
  cfg.head_activation = HeadActivation::kRelu;
  const Params p = ts::random_params(cfg, 77, 1.7);
  const Params back = checkpoint_from_json(nlohmann::json::parse(checkpoint_to_json(p).dump()));
  EXPECT_EQ(back, p);
  EXPECT_FALSE(back.config.face_to_edge);
  EXPECT_FALSE(back.config.head_bias);
  EXPECT_EQ(back.config.head_activation, HeadActivation::kRelu);
}

TEST(Checkpoint, UnknownHeadActivationIsRejected) {
  EXPECT_THROW(model_config_from_json({{"head_activation", "sigmoid"}}), ConfigError);
}

TEST(Checkpoint, RejectsDamagedDocuments) {
  const Params p = init_params(small_model(), 1);
  auto j = checkpoint_to_json(p);
  j["format"] = "pickle";
  EXPECT_THROW(checkpoint_from_json(j), ParseError);
  j = checkpoint_to_json(p);
  j["tensors"].erase(0);
  EXPECT_THROW(checkpoint_from_json(j), ParseError);
  j = checkpoint_to_json(p);
  j["tensors"][1]["shape"] = {7, 7};
  EXPECT_THROW(checkpoint_from_json(j), ShapeError);
  j = checkpoint_to_json(p);
  j["model"]["embed_dim"] = 5;
  EXPECT_THROW(checkpoint_from_json(j), ShapeError);
}
