#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "slumroad/errors.hpp"

namespace slumroad {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
inline Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
inline Point operator*(Point a, double s) { return {a.x * s, a.y * s}; }

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// A closed ring stored without the repeated closing vertex.
using Ring = std::vector<Point>;

struct BoundingBox {
  Point min{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Point max{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void extend(Point p) {
    min.x = std::min(min.x, p.x);
    min.y = std::min(min.y, p.y);
    max.x = std::max(max.x, p.x);
    max.y = std::max(max.y, p.y);
  }
  double diagonal() const { return distance(min, max); }
  bool overlaps(const BoundingBox& o, double tol) const {
    return min.x <= o.max.x + tol && o.min.x <= max.x + tol && min.y <= o.max.y + tol &&
           o.min.y <= max.y + tol;
  }
};

inline BoundingBox bounds(const Ring& ring) {
  BoundingBox b;
  for (const Point& p : ring) b.extend(p);
  return b;
}

namespace geom {

/// Distance from p to the closed segment [a, b].
inline double point_segment_distance(Point p, Point a, Point b) {
  const Point ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

inline int orientation(Point a, Point b, Point c, double tol) {
  const double v = cross(b - a, c - a);
  if (v > tol) return 1;
  if (v < -tol) return -1;
  return 0;
}

/// True when the open interiors of [a,b] and [c,d] cross at a single point.
inline bool segments_cross_properly(Point a, Point b, Point c, Point d, double tol) {
  const int o1 = orientation(a, b, c, tol);
  const int o2 = orientation(a, b, d, tol);
  const int o3 = orientation(c, d, a, tol);
  const int o4 = orientation(c, d, b, tol);
  return o1 * o2 < 0 && o3 * o4 < 0;
}

/// True when the closed segments share any point.
inline bool segments_touch(Point a, Point b, Point c, Point d, double tol) {
  if (segments_cross_properly(a, b, c, d, tol)) return true;
  return point_segment_distance(a, c, d) <= tol || point_segment_distance(b, c, d) <= tol ||
         point_segment_distance(c, a, b) <= tol || point_segment_distance(d, a, b) <= tol;
}

inline bool on_ring_boundary(Point p, const Ring& ring, double tol) {
  for (std::size_t i = 0; i < ring.size(); ++i) {
    if (point_segment_distance(p, ring[i], ring[(i + 1) % ring.size()]) <= tol) return true;
  }
  return false;
}

/// Even-odd ray casting; boundary points are not classified here.
inline bool inside_ring(Point p, const Ring& ring) {
  bool inside = false;
  for (std::size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
    const Point& a = ring[i];
    const Point& b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

inline double signed_area(const Ring& ring) {
  double a = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) a += cross(ring[i], ring[(i + 1) % ring.size()]);
  return 0.5 * a;
}

inline bool is_convex(const Ring& ring, double tol) {
  int sign = 0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const int o = orientation(ring[i], ring[(i + 1) % ring.size()], ring[(i + 2) % ring.size()], tol);
    if (o == 0) continue;
    if (sign == 0) sign = o;
    if (o != sign) return false;
  }
  return true;
}

inline Point centroid(const Ring& ring) {
  Point c;
  for (const Point& p : ring) c = c + p;
  return c * (1.0 / static_cast<double>(ring.size()));
}

inline bool ring_self_intersects(const Ring& ring, double tol) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = ring[i], b = ring[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point c = ring[j], d = ring[(j + 1) % n];
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) {
        // Neighbouring segments may only share their common vertex.
        const Point shared = (j == i + 1) ? b : a;
        const Point other_i = (j == i + 1) ? a : b;
        const Point other_j = (j == i + 1) ? d : c;
        if (orientation(other_i, shared, other_j, tol) == 0 &&
            dot(other_i - shared, other_j - shared) > 0.0)
          return true;  // folds back on itself
        continue;
      }
      if (segments_touch(a, b, c, d, tol)) return true;
    }
  }
  return false;
}

}  // namespace geom

/// Raw slum geometry: the surrounding road boundary and the tessellating places.
struct SlumGeometry {
  Ring exterior;
  std::vector<Ring> places;
  std::optional<std::string> crs_hint;
};

namespace detail {

inline Ring read_ring(const nlohmann::json& coords, bool require_closed, const char* what) {
  if (!coords.is_array()) throw ParseError(std::string(what) + ": coordinates must be an array");
  Ring ring;
  ring.reserve(coords.size());
  for (const auto& c : coords) {
    if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number())
      throw ParseError(std::string(what) + ": each position must be [x, y]");
    const Point p{c[0].get<double>(), c[1].get<double>()};
    if (ring.empty() || !(ring.back() == p)) ring.push_back(p);
  }
  if (ring.size() >= 2 && ring.front() == ring.back()) {
    ring.pop_back();
  } else if (require_closed) {
    throw GeometryError(std::string(what) + ": ring is not closed");
  }
  return ring;
}

inline void require_nondegenerate(const Ring& ring, const char* what) {
  Ring distinct;
  for (const Point& p : ring)
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) distinct.push_back(p);
  if (distinct.size() < 3)
    throw GeometryError(std::string(what) + ": fewer than 3 distinct vertices");
}

}  // namespace detail

/// Checks the SlumGeometry invariants; throws GeometryError on violation.
inline void validate(const SlumGeometry& g) {
  if (g.exterior.size() < 3) throw GeometryError("exterior: fewer than 3 vertices");
  if (g.places.empty()) throw GeometryError("no place polygons");
  BoundingBox all = bounds(g.exterior);
  const double tol = 1e-9 * std::max(all.diagonal(), 1e-300);

  if (geom::ring_self_intersects(g.exterior, tol)) throw GeometryError("exterior self-intersects");
  std::vector<BoundingBox> boxes;
  boxes.reserve(g.places.size());
  for (std::size_t i = 0; i < g.places.size(); ++i) {
    const Ring& place = g.places[i];
    detail::require_nondegenerate(place, "place");
    if (geom::ring_self_intersects(place, tol))
      throw GeometryError("place " + std::to_string(i) + " self-intersects");
    for (const Point& p : place) {
      if (!geom::on_ring_boundary(p, g.exterior, tol) && !geom::inside_ring(p, g.exterior))
        throw GeometryError("place " + std::to_string(i) + " lies outside the exterior");
    }
    boxes.push_back(bounds(place));
  }
  for (std::size_t i = 0; i < g.places.size(); ++i) {
    const Ring& a = g.places[i];
    const bool a_convex = geom::is_convex(a, tol);
    for (std::size_t j = 0; j < g.places.size(); ++j) {
      if (i == j || !boxes[i].overlaps(boxes[j], tol)) continue;
      const Ring& b = g.places[j];
      auto interior_of_b = [&](Point p) {
        return !geom::on_ring_boundary(p, b, tol) && geom::inside_ring(p, b);
      };
      bool overlap = std::any_of(a.begin(), a.end(), interior_of_b);
      for (std::size_t s = 0; s < a.size() && !overlap; ++s)
        overlap = interior_of_b((a[s] + a[(s + 1) % a.size()]) * 0.5);
      if (!overlap && a_convex) overlap = interior_of_b(geom::centroid(a));
      if (!overlap && j > i) {
        for (std::size_t s = 0; s < a.size() && !overlap; ++s)
          for (std::size_t t = 0; t < b.size() && !overlap; ++t)
            overlap = geom::segments_cross_properly(a[s], a[(s + 1) % a.size()], b[t],
                                                    b[(t + 1) % b.size()], tol);
      }
      if (overlap)
        throw GeometryError("places " + std::to_string(i) + " and " + std::to_string(j) +
                            " overlap");
    }
  }
}

/// Parses a GeoJSON FeatureCollection: polygons with `kind = "place"` and one
/// closed ring (LineString or Polygon) with `kind = "exterior"`.
inline SlumGeometry parse_slum(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
      !doc.contains("features") || !doc["features"].is_array())
    throw ParseError("expected a GeoJSON FeatureCollection");

  SlumGeometry g;
  bool have_exterior = false;
  for (const auto& feature : doc["features"]) {
    if (!feature.is_object() || !feature.contains("geometry"))
      throw ParseError("feature without geometry");
    const auto& geometry = feature["geometry"];
    const std::string type = geometry.value("type", "");
    std::string kind;
    if (feature.contains("properties") && feature["properties"].is_object())
      kind = feature["properties"].value("kind", "");
    if (!geometry.contains("coordinates")) throw ParseError("geometry without coordinates");
    const auto& coords = geometry["coordinates"];

    if (kind == "exterior") {
      if (have_exterior) throw ParseError("more than one exterior feature");
      if (type == "LineString") {
        g.exterior = detail::read_ring(coords, true, "exterior");
      } else if (type == "Polygon") {
        if (!coords.is_array() || coords.empty()) throw ParseError("exterior: empty polygon");
        g.exterior = detail::read_ring(coords[0], true, "exterior");
      } else {
        throw ParseError("exterior must be a LineString or Polygon, got '" + type + "'");
      }
      detail::require_nondegenerate(g.exterior, "exterior");
      have_exterior = true;
    } else if (kind == "place") {
      if (type != "Polygon") throw ParseError("place must be a Polygon, got '" + type + "'");
      if (!coords.is_array() || coords.empty()) throw ParseError("place: empty polygon");
      g.places.push_back(detail::read_ring(coords[0], true, "place"));
    } else {
      throw ParseError("feature kind must be 'place' or 'exterior', got '" + kind + "'");
    }
  }
  if (!have_exterior) throw ParseError("document has no exterior feature");
  if (g.places.empty()) throw ParseError("document has no place polygons");
  if (doc.contains("crs_hint") && doc["crs_hint"].is_string())
    g.crs_hint = doc["crs_hint"].get<std::string>();
  validate(g);
  return g;
}

inline SlumGeometry parse_slum(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  return parse_slum(doc);
}

inline nlohmann::json to_geojson(const SlumGeometry& g) {
  auto ring_json = [](const Ring& r) {
    nlohmann::json coords = nlohmann::json::array();
    for (const Point& p : r) coords.push_back({p.x, p.y});
    coords.push_back({r.front().x, r.front().y});
    return coords;
  };
  nlohmann::json features = nlohmann::json::array();
  features.push_back({{"type", "Feature"},
                      {"properties", {{"kind", "exterior"}}},
                      {"geometry", {{"type", "LineString"}, {"coordinates", ring_json(g.exterior)}}}});
  for (const Ring& place : g.places) {
    features.push_back(
        {{"type", "Feature"},
         {"properties", {{"kind", "place"}}},
         {"geometry", {{"type", "Polygon"}, {"coordinates", nlohmann::json::array({ring_json(place)})}}}});
  }
  nlohmann::json doc = {{"type", "FeatureCollection"}, {"features", features}};
  if (g.crs_hint) doc["crs_hint"] = *g.crs_hint;
  return doc;
}

}  // namespace slumroad
