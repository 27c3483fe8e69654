#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/errors.hpp"
#include "slumroad/geometry.hpp"
#include "slumroad/planar_graph.hpp"
#include "slumroad/slum_state.hpp"

namespace slumroad {

/// rows x cols lattice of unit quadrilateral places. Interior vertices move
/// by up to jitter in each axis; perimeter vertices only slide along the
/// perimeter and corners stay fixed, so the exterior stays a rectangle.
inline SlumGeometry generate_synthetic(int rows, int cols, double jitter, std::uint64_t seed) {
  if (rows < 1 || cols < 1) throw DomainError("rows and cols must be at least 1");
  if (!(jitter >= 0.0 && jitter < 0.5)) throw DomainError("jitter must lie in [0, 0.5)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-jitter, jitter);
  const auto idx = [cols](int r, int c) { return static_cast<std::size_t>(r) * (cols + 1) + c; };
  std::vector<Point> v(static_cast<std::size_t>(rows + 1) * (cols + 1));
  for (int r = 0; r <= rows; ++r) {
    for (int c = 0; c <= cols; ++c) {
      const double dx = jitter > 0.0 ? u(rng) : 0.0;
      const double dy = jitter > 0.0 ? u(rng) : 0.0;
      const bool col_edge = c == 0 || c == cols;
      const bool row_edge = r == 0 || r == rows;
      v[idx(r, c)] = {c + (col_edge ? 0.0 : dx), r + (row_edge ? 0.0 : dy)};
    }
  }
  SlumGeometry g;
  g.crs_hint = "synthetic-unit-grid";
  for (int c = 0; c < cols; ++c) g.exterior.push_back(v[idx(0, c)]);
  for (int r = 0; r < rows; ++r) g.exterior.push_back(v[idx(r, cols)]);
  for (int c = cols; c > 0; --c) g.exterior.push_back(v[idx(rows, c)]);
  for (int r = rows; r > 0; --r) g.exterior.push_back(v[idx(r, 0)]);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      g.places.push_back({v[idx(r, c)], v[idx(r, c + 1)], v[idx(r + 1, c + 1)], v[idx(r + 1, c)]});
  return g;
}

/// Geometry -> validated, simplified, normalised environment context.
inline std::shared_ptr<const SlumContext> load_context(const SlumGeometry& geo, const PrepareOptions& opt,
                                                       const std::string& id) {
  validate(geo);
  return make_context(prepare_graph(build_planar_graph(geo), opt).graph, id);
}

/// Accepts either a slum GeoJSON document or a graph document.
inline std::shared_ptr<const SlumContext> load_context(const nlohmann::json& doc, const PrepareOptions& opt,
                                                       const std::string& id) {
  if (doc.is_object() && doc.value("format", "") == "slumroad-graph") return make_context(graph_from_json(doc), id);
  return load_context(parse_slum(doc), opt, id);
}

inline std::string synthetic_id(int rows, int cols, double jitter, std::uint64_t seed) {
  return "grid" + std::to_string(rows) + "x" + std::to_string(cols) + (jitter > 0.0 ? "-j" + std::to_string(seed) : "");
}

}  // namespace slumroad
