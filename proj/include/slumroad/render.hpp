#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/errors.hpp"
#include "slumroad/plan_report.hpp"
#include "slumroad/slum_state.hpp"

namespace slumroad {

namespace style {
inline constexpr const char* kExterior = "#333333";
inline constexpr const char* kStageI = "#1f77b4";   // blue
inline constexpr const char* kStageII = "#ff7f0e";  // orange
inline constexpr const char* kCandidate = "#c8c8c8";
inline constexpr const char* kDisconnected = "#d62728";  // red
inline constexpr const char* kConnected = "#f2efe6";
}  // namespace style

namespace detail {

inline void require_plan_fits(const PlanReport& plan, const PlanarGraph& g) {
  for (const PlanStep& s : plan.steps)
    if (s.edge < 0 || static_cast<std::size_t>(s.edge) >= g.edges.size())
      throw DomainError("plan edge " + std::to_string(s.edge) + " is not in the graph");
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

}  // namespace detail

/// Places (red when still disconnected), candidate segments, exterior roads
/// and planned roads coloured by the stage that built them.
inline std::string render_svg(const PlanReport& plan, const std::shared_ptr<const SlumContext>& ctx, double width = 800.0) {
  const PlanarGraph& g = ctx->graph;
  detail::require_plan_fits(plan, g);
  SlumGraph final_state(ctx);
  std::map<EdgeId, Stage> built;
  for (const PlanStep& s : plan.steps) {
    final_state.set_road(s.edge);
    built[s.edge] = s.stage;
  }

  BoundingBox box;
  for (const Point& p : g.nodes) box.extend(p);
  const double span = std::max({box.max.x - box.min.x, box.max.y - box.min.y, 1e-12});
  const double margin = 10.0;
  const double scale = (width - 2 * margin) / span;
  const double height = (box.max.y - box.min.y) * scale + 2 * margin;
  auto px = [&](Point p) {
    return detail::fmt(margin + (p.x - box.min.x) * scale) + "," + detail::fmt(height - margin - (p.y - box.min.y) * scale);
  };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt(width) << "\" height=\"" << detail::fmt(height)
    << "\" viewBox=\"0 0 " << detail::fmt(width) << ' ' << detail::fmt(height) << "\">\n";
  o << "<title>" << plan.slum_id << " / " << plan.planner_id << "</title>\n";
  o << "<g id=\"places\">\n";
  for (FaceId f = 0; f < static_cast<FaceId>(g.faces.size()); ++f) {
    const bool ok = final_state.connected(f);
    o << "<polygon class=\"place " << (ok ? "connected" : "disconnected") << "\" data-face=\"" << f << "\" points=\"";
    for (NodeId v : g.faces[f].nodes) o << px(g.nodes[v]) << ' ';
    o << "\" fill=\"" << (ok ? style::kConnected : style::kDisconnected) << "\" stroke=\"none\"/>\n";
  }
  o << "</g>\n<g id=\"segments\" fill=\"none\" stroke-linecap=\"round\">\n";
  for (EdgeId e = 0; e < static_cast<EdgeId>(g.edges.size()); ++e) {
    const Edge& ed = g.edges[e];
    std::string cls = "candidate";
    const char* color = style::kCandidate;
    double w = 1.0;
    if (ed.exterior) {
      cls = "exterior";
      color = style::kExterior;
      w = 3.0;
    } else if (auto it = built.find(e); it != built.end()) {
      cls = it->second == Stage::kConnect ? "stage-I" : "stage-II";
      color = it->second == Stage::kConnect ? style::kStageI : style::kStageII;
      w = 3.0;
    }
    o << "<polyline class=\"" << cls << "\" data-edge=\"" << e << "\" points=\"";
    for (const Point& p : ed.polyline) o << px(p) << ' ';
    o << "\" stroke=\"" << color << "\" stroke-width=\"" << detail::fmt(w) << "\"/>\n";
  }
  o << "</g>\n</svg>\n";
  return o.str();
}

/// Planned roads as LineStrings carrying edge id, step, stage and cost.
inline nlohmann::json export_geojson(const PlanReport& plan, const PlanarGraph& g) {
  detail::require_plan_fits(plan, g);
  nlohmann::json features = nlohmann::json::array();
  for (const PlanStep& s : plan.steps) {
    const Edge& ed = g.edges[s.edge];
    nlohmann::json coords = nlohmann::json::array();
    for (const Point& p : ed.polyline) coords.push_back({p.x, p.y});
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                        {"properties",
                         {{"kind", "planned_road"},
                          {"edge", s.edge},
                          {"step", s.step},
                          {"stage", to_string(s.stage)},
                          {"cost", ed.cost}}}});
  }
  return {{"type", "FeatureCollection"},
          {"properties", {{"slum", plan.slum_id}, {"planner", plan.planner_id}}},
          {"features", features}};
}

/// Edge ids of an exported plan, in step order.
inline std::vector<EdgeId> plan_edges_from_geojson(const nlohmann::json& doc) {
  try {
    std::vector<std::pair<int, EdgeId>> steps;
    for (const auto& f : doc.at("features")) {
      const auto& p = f.at("properties");
      if (p.value("kind", "") != "planned_road") continue;
      steps.emplace_back(p.at("step").get<int>(), p.at("edge").get<EdgeId>());
    }
    std::sort(steps.begin(), steps.end());
    std::vector<EdgeId> out;
    for (const auto& [step, e] : steps) out.push_back(e);
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed plan GeoJSON: ") + e.what());
  }
}

}  // namespace slumroad
