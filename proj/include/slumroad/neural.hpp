#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/env.hpp"
#include "slumroad/errors.hpp"
#include "slumroad/matrix.hpp"
#include "slumroad/planar_graph.hpp"
#include "slumroad/slum_state.hpp"

namespace slumroad {

enum class HeadActivation { kTanh, kRelu };

inline const char* to_string(HeadActivation a) { return a == HeadActivation::kTanh ? "tanh" : "relu"; }

struct ModelConfig {
  std::size_t embed_dim = 16;
  std::size_t layers = 2;
  std::size_t policy_hidden = 32;
  std::size_t value_hidden = 32;
  // Propagation branches; switched off only for ablations.
  bool node_to_edge = true;
  bool face_to_edge = true;
  bool edge_self = true;
  // Policy and value perceptrons. Without biases the bias tensors stay in
  // checkpoints but are read as zero and never receive gradient.
  bool head_bias = true;
  HeadActivation head_activation = HeadActivation::kTanh;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct LayerParams {
  Matrix node_to_edge;    // d x 2d, no bias
  Matrix integrate;       // d x 3d
  Matrix integrate_bias;  // d x 1

  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Every learnable matrix of encoder, policy head and value head. The
/// face-to-edge and edge-self transforms are fixed identities and have no
/// entry here.
struct Params {
  ModelConfig config;
  Matrix node_embed;  // d x 9
  Matrix edge_embed;  // d x 3
  Matrix face_embed;  // d x 3
  std::vector<LayerParams> layers;
  Matrix policy_w1, policy_b1, policy_w2, policy_b2;
  Matrix value_w1, value_b1, value_w2, value_b2, value_w3, value_b3;

  template <class F>
  void for_each(F&& f) {
    visit_impl(*this, f);
  }
  template <class F>
  void for_each(F&& f) const {
    visit_impl(*this, f);
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Matrix& m) { n += m.size(); });
    return n;
  }

  friend bool operator==(const Params&, const Params&) = default;

 private:
  template <class Self, class F>
  static void visit_impl(Self& self, F& f) {
    f(std::string("node_embed"), self.node_embed);
    f(std::string("edge_embed"), self.edge_embed);
    f(std::string("face_embed"), self.face_embed);
    for (std::size_t l = 0; l < self.layers.size(); ++l) {
      const std::string p = "layer" + std::to_string(l) + ".";
      f(p + "node_to_edge", self.layers[l].node_to_edge);
      f(p + "integrate", self.layers[l].integrate);
      f(p + "integrate_bias", self.layers[l].integrate_bias);
    }
    f(std::string("policy_w1"), self.policy_w1);
    f(std::string("policy_b1"), self.policy_b1);
    f(std::string("policy_w2"), self.policy_w2);
    f(std::string("policy_b2"), self.policy_b2);
    f(std::string("value_w1"), self.value_w1);
    f(std::string("value_b1"), self.value_b1);
    f(std::string("value_w2"), self.value_w2);
    f(std::string("value_b2"), self.value_b2);
    f(std::string("value_w3"), self.value_w3);
    f(std::string("value_b3"), self.value_b3);
  }
};

inline std::size_t value_input_dim(const ModelConfig& c) { return 2 * c.embed_dim + 2; }

/// Zero-valued parameters with the shapes implied by `cfg`.
inline Params zero_params(const ModelConfig& cfg) {
  const std::size_t d = cfg.embed_dim, ph = cfg.policy_hidden, vh = cfg.value_hidden;
  Params p;
  p.config = cfg;
  p.node_embed = Matrix(d, feature::kNodeDim);
  p.edge_embed = Matrix(d, feature::kEdgeDim);
  p.face_embed = Matrix(d, feature::kFaceDim);
  for (std::size_t l = 0; l < cfg.layers; ++l) p.layers.push_back({Matrix(d, 2 * d), Matrix(d, 3 * d), Matrix(d, 1)});
  p.policy_w1 = Matrix(ph, d);
  p.policy_b1 = Matrix(ph, 1);
  p.policy_w2 = Matrix(1, ph);
  p.policy_b2 = Matrix(1, 1);
  p.value_w1 = Matrix(vh, value_input_dim(cfg));
  p.value_b1 = Matrix(vh, 1);
  p.value_w2 = Matrix(vh, vh);
  p.value_b2 = Matrix(vh, 1);
  p.value_w3 = Matrix(1, vh);
  p.value_b3 = Matrix(1, 1);
  return p;
}

inline Params zeros_like(const Params& p) { return zero_params(p.config); }

/// Glorot-uniform weights, zero biases.
inline Params init_params(const ModelConfig& cfg, std::uint64_t seed) {
  Params p = zero_params(cfg);
  std::mt19937_64 rng(seed);
  p.for_each([&](const std::string& name, Matrix& m) {
    if (name.find("_b") != std::string::npos || name.find("bias") != std::string::npos) return;
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : m.values()) v = u(rng);
  });
  return p;
}

/// Incidence needed by the encoder.
struct Topology {
  std::vector<std::array<NodeId, 2>> edge_nodes;
  std::vector<std::vector<FaceId>> edge_faces;
  std::vector<std::vector<EdgeId>> node_edges;
  std::size_t num_faces = 0;

  std::size_t num_nodes() const { return node_edges.size(); }
  std::size_t num_edges() const { return edge_nodes.size(); }
};

inline Topology make_topology(const PlanarGraph& g) {
  Topology t;
  for (const Edge& e : g.edges) t.edge_nodes.push_back({e.a, e.b});
  t.edge_faces = g.edge_faces;
  t.node_edges = g.node_edges;
  t.num_faces = g.faces.size();
  for (std::size_t v = 0; v < t.node_edges.size(); ++v)
    if (t.node_edges[v].empty()) throw IsolatedNodeError("node " + std::to_string(v) + " has no incident edge");
  return t;
}

// ---------------------------------------------------------------------------
// Forward building blocks.

struct InputEmbeddings {
  Matrix node;  // N x d
  Matrix edge;  // E x d
  Matrix face;  // F x d
};

/// Linear, bias-free input embeddings of the three feature tables.
inline InputEmbeddings embed_inputs(const FeatureSet& fs, const Params& p) {
  if (fs.node.cols() != feature::kNodeDim || fs.edge.cols() != feature::kEdgeDim ||
      fs.face.cols() != feature::kFaceDim)
    throw ShapeError("feature tables must be 9/3/3 columns wide");
  const std::size_t d = p.config.embed_dim;
  require_shape(p.node_embed, d, feature::kNodeDim, "node_embed");
  require_shape(p.edge_embed, d, feature::kEdgeDim, "edge_embed");
  require_shape(p.face_embed, d, feature::kFaceDim, "face_embed");
  InputEmbeddings out{Matrix(fs.node.rows(), d), Matrix(fs.edge.rows(), d), Matrix(fs.face.rows(), d)};
  for (std::size_t i = 0; i < fs.node.rows(); ++i) gemv_add(p.node_embed, fs.node.row(i), out.node.row(i));
  for (std::size_t i = 0; i < fs.edge.rows(); ++i) gemv_add(p.edge_embed, fs.edge.row(i), out.edge.row(i));
  for (std::size_t i = 0; i < fs.face.rows(); ++i) gemv_add(p.face_embed, fs.face.row(i), out.face.row(i));
  return out;
}

/// Face-to-edge message: tanh of the mean layer-0 embedding of adjacent faces.
inline Matrix face_to_edge_messages(const Matrix& face0, const Topology& t, std::size_t d, bool enabled) {
  Matrix out(t.num_edges(), d);
  if (!enabled) return out;
  for (std::size_t e = 0; e < t.num_edges(); ++e) {
    const auto& fs = t.edge_faces[e];
    if (fs.empty()) continue;
    auto row = out.row(e);
    for (FaceId f : fs)
      for (std::size_t k = 0; k < d; ++k) row[k] += face0(f, k);
    for (double& v : row) v = std::tanh(v / static_cast<double>(fs.size()));
  }
  return out;
}

/// Edge self-message: tanh of the edge's own layer-0 embedding.
inline Matrix edge_self_messages(const Matrix& edge0, bool enabled) {
  Matrix out(edge0.rows(), edge0.cols());
  if (!enabled) return out;
  for (std::size_t i = 0; i < edge0.size(); ++i) out.values()[i] = std::tanh(edge0.values()[i]);
  return out;
}

struct LayerOutput {
  Matrix node_msg;  // E x d, node-to-edge message
  Matrix edge;      // E x d, integrated edge embedding
  Matrix node;      // N x d, residual node update
};

/// One round of topology-aware propagation: pull node, face and self
/// messages into edges, integrate, then broadcast edges back to nodes.
inline LayerOutput message_passing_layer(const Matrix& node, const Matrix& face_msg, const Matrix& self_msg,
                                         const Topology& t, const Params& p, std::size_t l) {
  const std::size_t d = p.config.embed_dim;
  if (l >= p.layers.size()) throw ShapeError("layer index out of range");
  require_shape(node, t.num_nodes(), d, "node embeddings");
  require_shape(face_msg, t.num_edges(), d, "face messages");
  require_shape(self_msg, t.num_edges(), d, "self messages");
  const LayerParams& lp = p.layers[l];
  require_shape(lp.node_to_edge, d, 2 * d, "node_to_edge");
  require_shape(lp.integrate, d, 3 * d, "integrate");

  const std::size_t ne = t.num_edges();
  LayerOutput out{Matrix(ne, d), Matrix(ne, d), node};
  std::vector<double> pair(2 * d), cat(3 * d);
  for (std::size_t e = 0; e < ne; ++e) {
    auto msg = out.node_msg.row(e);
    if (p.config.node_to_edge) {
      const auto [a, b] = t.edge_nodes[e];
      std::copy_n(node.row(a).begin(), d, pair.begin());
      std::copy_n(node.row(b).begin(), d, pair.begin() + static_cast<std::ptrdiff_t>(d));
      gemv_add(lp.node_to_edge, pair, msg);
      for (double& v : msg) v = std::tanh(v);
    }
    std::copy_n(msg.begin(), d, cat.begin());
    std::copy_n(face_msg.row(e).begin(), d, cat.begin() + static_cast<std::ptrdiff_t>(d));
    std::copy_n(self_msg.row(e).begin(), d, cat.begin() + static_cast<std::ptrdiff_t>(2 * d));
    auto er = out.edge.row(e);
    for (std::size_t k = 0; k < d; ++k) er[k] = lp.integrate_bias(k, 0);
    gemv_add(lp.integrate, cat, er);
    for (double& v : er) v = std::tanh(v);
  }
  for (std::size_t v = 0; v < t.num_nodes(); ++v) {
    const auto& inc = t.node_edges[v];
    if (inc.empty()) throw IsolatedNodeError("node " + std::to_string(v) + " has no incident edge");
    auto nr = out.node.row(v);
    const double inv = 1.0 / static_cast<double>(inc.size());
    for (EdgeId e : inc)
      for (std::size_t k = 0; k < d; ++k) nr[k] += out.edge(e, k) * inv;
  }
  return out;
}

namespace detail {

inline double head_act(double z, HeadActivation a) { return a == HeadActivation::kTanh ? std::tanh(z) : std::max(z, 0.0); }

/// Derivative expressed through the activation's output.
inline double head_act_grad(double y, HeadActivation a) {
  return a == HeadActivation::kTanh ? 1.0 - y * y : (y > 0.0 ? 1.0 : 0.0);
}

inline double head_bias(const Matrix& b, std::size_t k, const ModelConfig& c) { return c.head_bias ? b(k, 0) : 0.0; }

}  // namespace detail

/// Per-edge score from a one-hidden-layer perceptron over the final edge embedding.
/// `hidden`, when given, receives the E x h hidden activations.
inline std::vector<double> policy_scores(const Matrix& edge, const Params& p, Matrix* hidden = nullptr) {
  const std::size_t d = p.config.embed_dim, h = p.config.policy_hidden;
  if (edge.cols() != d) throw ShapeError("edge embeddings have the wrong width");
  require_shape(p.policy_w1, h, d, "policy_w1");
  require_shape(p.policy_w2, 1, h, "policy_w2");
  std::vector<double> scores(edge.rows());
  Matrix hid(edge.rows(), h);
  for (std::size_t e = 0; e < edge.rows(); ++e) {
    auto hr = hid.row(e);
    for (std::size_t k = 0; k < h; ++k) hr[k] = detail::head_bias(p.policy_b1, k, p.config);
    gemv_add(p.policy_w1, edge.row(e), hr);
    for (double& v : hr) v = detail::head_act(v, p.config.head_activation);
    double s = detail::head_bias(p.policy_b2, 0, p.config);
    for (std::size_t k = 0; k < h; ++k) s += p.policy_w2(0, k) * hr[k];
    scores[e] = s;
  }
  if (hidden) *hidden = std::move(hid);
  return scores;
}

struct ValueTrace {
  std::vector<double> input;  // mean node || mean edge || stage one-hot
  std::vector<double> h1, h2;
};

/// Graph readout and value perceptron. StageI one-hot is (1, 0), StageII (0, 1).
inline double value_estimate(const Matrix& node, const Matrix& edge, Stage stage, const Params& p,
                             ValueTrace* trace = nullptr) {
  const std::size_t d = p.config.embed_dim, h = p.config.value_hidden;
  if (node.cols() != d || edge.cols() != d) throw ShapeError("embeddings have the wrong width");
  require_shape(p.value_w1, h, value_input_dim(p.config), "value_w1");
  require_shape(p.value_w2, h, h, "value_w2");
  require_shape(p.value_w3, 1, h, "value_w3");
  ValueTrace t;
  t.input.assign(2 * d + 2, 0.0);
  for (std::size_t i = 0; i < node.rows(); ++i)
    for (std::size_t k = 0; k < d; ++k) t.input[k] += node(i, k);
  for (std::size_t e = 0; e < edge.rows(); ++e)
    for (std::size_t k = 0; k < d; ++k) t.input[d + k] += edge(e, k);
  for (std::size_t k = 0; k < d; ++k) {
    if (node.rows()) t.input[k] /= static_cast<double>(node.rows());
    if (edge.rows()) t.input[d + k] /= static_cast<double>(edge.rows());
  }
  t.input[2 * d + (stage == Stage::kConnect ? 0 : 1)] = 1.0;
  const HeadActivation act = p.config.head_activation;
  t.h1.assign(h, 0.0);
  t.h2.assign(h, 0.0);
  for (std::size_t k = 0; k < h; ++k) t.h1[k] = detail::head_bias(p.value_b1, k, p.config);
  gemv_add(p.value_w1, t.input, t.h1);
  for (double& v : t.h1) v = detail::head_act(v, act);
  for (std::size_t k = 0; k < h; ++k) t.h2[k] = detail::head_bias(p.value_b2, k, p.config);
  gemv_add(p.value_w2, t.h1, t.h2);
  for (double& v : t.h2) v = detail::head_act(v, act);
  double out = detail::head_bias(p.value_b3, 0, p.config);
  for (std::size_t k = 0; k < h; ++k) out += p.value_w3(0, k) * t.h2[k];
  if (trace) *trace = std::move(t);
  return out;
}

// ---------------------------------------------------------------------------
// Full forward pass with everything the reverse pass needs.

struct ForwardPass {
  bool valid = false;
  FeatureSet inputs;
  Stage stage = Stage::kConnect;
  InputEmbeddings embed;
  Matrix face_msg, self_msg;
  std::vector<Matrix> node;  // L + 1 entries; node[0] = input embedding
  std::vector<LayerOutput> layer;
  Matrix policy_hidden;
  ValueTrace value_trace;
  std::vector<double> scores;
  double value = 0.0;

  const Matrix& final_edges() const { return layer.empty() ? embed.edge : layer.back().edge; }
  const Matrix& final_nodes() const { return node.back(); }
};

inline ForwardPass forward(const Params& p, const Topology& t, const FeatureSet& fs, Stage stage) {
  if (fs.node.rows() != t.num_nodes() || fs.edge.rows() != t.num_edges() || fs.face.rows() != t.num_faces)
    throw ShapeError("feature tables do not match the graph");
  ForwardPass fp;
  fp.inputs = fs;
  fp.stage = stage;
  fp.embed = embed_inputs(fs, p);
  const std::size_t d = p.config.embed_dim;
  fp.face_msg = face_to_edge_messages(fp.embed.face, t, d, p.config.face_to_edge);
  fp.self_msg = edge_self_messages(fp.embed.edge, p.config.edge_self);
  fp.node.push_back(fp.embed.node);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    fp.layer.push_back(message_passing_layer(fp.node.back(), fp.face_msg, fp.self_msg, t, p, l));
    fp.node.push_back(fp.layer.back().node);
  }
  fp.scores = policy_scores(fp.final_edges(), p, &fp.policy_hidden);
  fp.value = value_estimate(fp.final_nodes(), fp.final_edges(), stage, p, &fp.value_trace);
  fp.valid = true;
  return fp;
}

/// Reverse-mode pass: accumulates dLoss/dParams into `grads` given the
/// upstream gradients of the scores and of the value.
inline void backward(const Params& p, const Topology& t, const ForwardPass& fp, std::span<const double> dscores,
                     double dvalue, Params& grads) {
  if (!fp.valid) throw StateError("backward called before forward");
  if (dscores.size() != fp.scores.size()) throw ShapeError("score gradient has the wrong length");
  if (!(grads.config == p.config)) throw ShapeError("gradient buffer does not match the parameters");
  const std::size_t d = p.config.embed_dim;
  const std::size_t ne = t.num_edges(), nn = t.num_nodes();
  const std::size_t ph = p.config.policy_hidden, vh = p.config.value_hidden;

  Matrix d_edge(ne, d), d_node(nn, d);
  const HeadActivation act = p.config.head_activation;
  const double bias_on = p.config.head_bias ? 1.0 : 0.0;

  // Value head.
  if (dvalue != 0.0) {
    const ValueTrace& vt = fp.value_trace;
    std::vector<double> dz3{dvalue};
    outer_add(grads.value_w3, dz3, vt.h2);
    grads.value_b3(0, 0) += bias_on * dvalue;
    std::vector<double> dz2(vh, 0.0);
    gemv_t_add(p.value_w3, dz3, dz2);
    for (std::size_t k = 0; k < vh; ++k) dz2[k] *= detail::head_act_grad(vt.h2[k], act);
    outer_add(grads.value_w2, dz2, vt.h1);
    for (std::size_t k = 0; k < vh; ++k) grads.value_b2(k, 0) += bias_on * dz2[k];
    std::vector<double> dz1(vh, 0.0);
    gemv_t_add(p.value_w2, dz2, dz1);
    for (std::size_t k = 0; k < vh; ++k) dz1[k] *= detail::head_act_grad(vt.h1[k], act);
    outer_add(grads.value_w1, dz1, vt.input);
    for (std::size_t k = 0; k < vh; ++k) grads.value_b1(k, 0) += bias_on * dz1[k];
    std::vector<double> din(vt.input.size(), 0.0);
    gemv_t_add(p.value_w1, dz1, din);
    const double inv_n = nn ? 1.0 / static_cast<double>(nn) : 0.0;
    const double inv_e = ne ? 1.0 / static_cast<double>(ne) : 0.0;
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t k = 0; k < d; ++k) d_node(i, k) += din[k] * inv_n;
    for (std::size_t e = 0; e < ne; ++e)
      for (std::size_t k = 0; k < d; ++k) d_edge(e, k) += din[d + k] * inv_e;
  }

  // Policy head.
  std::vector<double> dz(ph);
  for (std::size_t e = 0; e < ne; ++e) {
    const double ds = dscores[e];
    if (ds == 0.0) continue;
    auto hr = fp.policy_hidden.row(e);
    for (std::size_t k = 0; k < ph; ++k) {
      grads.policy_w2(0, k) += ds * hr[k];
      dz[k] = ds * p.policy_w2(0, k) * detail::head_act_grad(hr[k], act);
    }
    grads.policy_b2(0, 0) += bias_on * ds;
    outer_add(grads.policy_w1, dz, fp.final_edges().row(e));
    for (std::size_t k = 0; k < ph; ++k) grads.policy_b1(k, 0) += bias_on * dz[k];
    gemv_t_add(p.policy_w1, dz, d_edge.row(e));
  }

  // Message-passing layers, last to first.
  Matrix d_face_msg(ne, d), d_self_msg(ne, d);
  std::vector<double> dzl(d), dcat(3 * d), dpair(2 * d), dzn(d), pair(2 * d), cat(3 * d);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const LayerParams& lp = p.layers[li];
    LayerParams& gl = grads.layers[li];
    const LayerOutput& lo = fp.layer[li];
    const Matrix& node_in = fp.node[li];
    // Residual broadcast: n_out = n_in + mean of incident edges.
    for (std::size_t v = 0; v < nn; ++v) {
      const auto& inc = t.node_edges[v];
      const double inv = 1.0 / static_cast<double>(inc.size());
      for (EdgeId e : inc)
        for (std::size_t k = 0; k < d; ++k) d_edge(e, k) += d_node(v, k) * inv;
    }
    Matrix d_node_in = d_node;  // identity path of the residual
    for (std::size_t e = 0; e < ne; ++e) {
      auto er = lo.edge.row(e);
      bool any = false;
      for (std::size_t k = 0; k < d; ++k) {
        dzl[k] = d_edge(e, k) * (1.0 - er[k] * er[k]);
        any |= dzl[k] != 0.0;
      }
      if (!any) continue;
      std::copy_n(lo.node_msg.row(e).begin(), d, cat.begin());
      std::copy_n(fp.face_msg.row(e).begin(), d, cat.begin() + static_cast<std::ptrdiff_t>(d));
      std::copy_n(fp.self_msg.row(e).begin(), d, cat.begin() + static_cast<std::ptrdiff_t>(2 * d));
      outer_add(gl.integrate, dzl, cat);
      for (std::size_t k = 0; k < d; ++k) gl.integrate_bias(k, 0) += dzl[k];
      std::fill(dcat.begin(), dcat.end(), 0.0);
      gemv_t_add(lp.integrate, dzl, dcat);
      for (std::size_t k = 0; k < d; ++k) {
        d_face_msg(e, k) += dcat[d + k];
        d_self_msg(e, k) += dcat[2 * d + k];
      }
      if (!p.config.node_to_edge) continue;
      auto mr = lo.node_msg.row(e);
      for (std::size_t k = 0; k < d; ++k) dzn[k] = dcat[k] * (1.0 - mr[k] * mr[k]);
      const auto [a, b] = t.edge_nodes[e];
      std::copy_n(node_in.row(a).begin(), d, pair.begin());
      std::copy_n(node_in.row(b).begin(), d, pair.begin() + static_cast<std::ptrdiff_t>(d));
      outer_add(gl.node_to_edge, dzn, pair);
      std::fill(dpair.begin(), dpair.end(), 0.0);
      gemv_t_add(lp.node_to_edge, dzn, dpair);
      for (std::size_t k = 0; k < d; ++k) {
        d_node_in(a, k) += dpair[k];
        d_node_in(b, k) += dpair[d + k];
      }
    }
    d_node = std::move(d_node_in);
    d_edge.fill(0.0);  // intermediate edge embeddings feed only their own layer
  }

  // Layer-0 embeddings through the identity-weighted face and self messages.
  Matrix d_edge0(ne, d), d_face0(t.num_faces, d);
  for (std::size_t e = 0; e < ne; ++e) {
    if (p.config.edge_self) {
      for (std::size_t k = 0; k < d; ++k) {
        const double s = fp.self_msg(e, k);
        d_edge0(e, k) += d_self_msg(e, k) * (1.0 - s * s);
      }
    }
    const auto& fs = t.edge_faces[e];
    if (!p.config.face_to_edge || fs.empty()) continue;
    const double inv = 1.0 / static_cast<double>(fs.size());
    for (std::size_t k = 0; k < d; ++k) {
      const double m = fp.face_msg(e, k);
      const double g = d_face_msg(e, k) * (1.0 - m * m) * inv;
      for (FaceId f : fs) d_face0(f, k) += g;
    }
  }
  for (std::size_t i = 0; i < nn; ++i) outer_add(grads.node_embed, d_node.row(i), fp.inputs.node.row(i));
  for (std::size_t e = 0; e < ne; ++e) outer_add(grads.edge_embed, d_edge0.row(e), fp.inputs.edge.row(e));
  for (std::size_t f = 0; f < t.num_faces; ++f) outer_add(grads.face_embed, d_face0.row(f), fp.inputs.face.row(f));
}

// ---------------------------------------------------------------------------
// Masked action distribution.

/// Softmax restricted to unmasked edges; masked edges get exactly 0.
inline std::vector<double> masked_distribution(std::span<const double> scores, const Mask& mask) {
  if (scores.size() != mask.size()) throw ShapeError("scores and mask differ in length");
  double top = -kInf;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) top = std::max(top, scores[i]);
  if (top == -kInf) throw EmptyMaskError("no unmasked edge");
  std::vector<double> p(scores.size(), 0.0);
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) z += (p[i] = std::exp(scores[i] - top));
  for (double& v : p) v /= z;
  return p;
}

inline double log_prob(std::span<const double> scores, const Mask& mask, std::size_t action) {
  double top = -kInf;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) top = std::max(top, scores[i]);
  if (top == -kInf) throw EmptyMaskError("no unmasked edge");
  double z = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i]) z += std::exp(scores[i] - top);
  return scores[action] - top - std::log(z);
}

inline double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

/// Highest-probability unmasked edge; ties go to the lowest id.
inline EdgeId greedy_action(std::span<const double> scores, const Mask& mask) {
  EdgeId best = -1;
  for (std::size_t i = 0; i < scores.size(); ++i)
    if (mask[i] && (best < 0 || scores[i] > scores[static_cast<std::size_t>(best)])) best = static_cast<EdgeId>(i);
  if (best < 0) throw EmptyMaskError("no unmasked edge");
  return best;
}

// ---------------------------------------------------------------------------
// Checkpoints: {"format": "slumroad-checkpoint", "version": 1, "model": {...},
//   "tensors": [{"name", "shape": [rows, cols], "values": [row-major]}]}

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},       {"layers", c.layers},
          {"policy_hidden", c.policy_hidden}, {"value_hidden", c.value_hidden},
          {"node_to_edge", c.node_to_edge}, {"face_to_edge", c.face_to_edge},
          {"edge_self", c.edge_self},       {"head_bias", c.head_bias},
          {"head_activation", to_string(c.head_activation)}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.layers = j.value("layers", c.layers);
  c.policy_hidden = j.value("policy_hidden", c.policy_hidden);
  c.value_hidden = j.value("value_hidden", c.value_hidden);
  c.node_to_edge = j.value("node_to_edge", c.node_to_edge);
  c.face_to_edge = j.value("face_to_edge", c.face_to_edge);
  c.edge_self = j.value("edge_self", c.edge_self);
  c.head_bias = j.value("head_bias", c.head_bias);
  const std::string act = j.value("head_activation", std::string(to_string(c.head_activation)));
  if (act == "tanh")
    c.head_activation = HeadActivation::kTanh;
  else if (act == "relu")
    c.head_activation = HeadActivation::kRelu;
  else
    throw ConfigError("head_activation must be tanh or relu, got '" + act + "'");
  return c;
}

inline nlohmann::json checkpoint_to_json(const Params& p) {
  nlohmann::json tensors = nlohmann::json::array();
  p.for_each([&](const std::string& name, const Matrix& m) {
    tensors.push_back({{"name", name}, {"shape", {m.rows(), m.cols()}}, {"values", m.values()}});
  });
  return {{"format", "slumroad-checkpoint"}, {"version", 1}, {"model", to_json(p.config)}, {"tensors", tensors}};
}

inline Params checkpoint_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", "") != "slumroad-checkpoint") throw ParseError("not a slumroad checkpoint");
    if (j.value("version", 0) != 1) throw ParseError("unsupported checkpoint version");
    Params p = zero_params(model_config_from_json(j.at("model")));
    std::map<std::string, const nlohmann::json*> by_name;
    for (const auto& t : j.at("tensors")) by_name[t.at("name").get<std::string>()] = &t;
    p.for_each([&](const std::string& name, Matrix& m) {
      auto it = by_name.find(name);
      if (it == by_name.end()) throw ParseError("checkpoint is missing tensor " + name);
      const auto& t = *it->second;
      const auto shape = t.at("shape").get<std::vector<std::size_t>>();
      if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols())
        throw ShapeError("tensor " + name + " has the wrong shape");
      auto values = t.at("values").get<std::vector<double>>();
      if (values.size() != m.size()) throw ShapeError("tensor " + name + " has the wrong length");
      m.values() = std::move(values);
    });
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
}

inline void save_checkpoint(const Params& p, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint " + path);
  out << checkpoint_to_json(p).dump() << '\n';
}

inline Params load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what());
  }
  return checkpoint_from_json(j);
}

}  // namespace slumroad
