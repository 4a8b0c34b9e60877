#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "domain.hpp"
#include "error.hpp"
#include "field.hpp"
#include "whitney.hpp"

namespace tracext {

using json = nlohmann::json;

// Decimal with 12 significant digits; non-finite values become null.
inline json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::stod(buf);
}

inline json point_json(Point2 p) { return json::array({p.x, p.y}); }

inline Point2 point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw DataError("a point must be a two-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline json space_to_json(const SampledSpace& s) {
  json j;
  j["metric"] = to_string(s.metric_kind());
  j["weights"] = std::vector<double>(s.weights().begin(), s.weights().end());
  if (s.has_coordinates()) {
    json pts = json::array();
    for (Point2 p : s.points()) pts.push_back(point_json(p));
    j["points"] = std::move(pts);
    j["table"] = nullptr;
  } else {
    j["points"] = nullptr;
    json t = json::array();
    for (std::size_t a = 0; a < s.size(); ++a) {
      std::vector<double> row(s.size());
      for (std::size_t b = 0; b < s.size(); ++b) row[b] = s.distance(a, b);
      t.push_back(row);
    }
    j["table"] = std::move(t);
  }
  return j;
}

inline SampledSpace space_from_json(const json& j) {
  try {
    const auto weights = j.at("weights").get<std::vector<double>>();
    const bool has_points = j.contains("points") && !j["points"].is_null();
    const std::string metric = j.value("metric", has_points ? "euclidean-2d" : "table");
    if (metric == "euclidean-2d") {
      std::vector<Point2> pts;
      for (const auto& p : j.at("points")) pts.push_back(point_from_json(p));
      return SampledSpace::euclidean(std::move(pts), weights);
    }
    if (metric == "table")
      return SampledSpace::from_table(j.at("table").get<std::vector<std::vector<double>>>(), weights);
    throw DataError("unknown metric '" + metric + "'");
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed space JSON: ") + e.what());
  }
}

inline json domain_to_json(const Domain& d) {
  json j = space_to_json(d.space());
  j["interior"] = d.interior();
  j["boundary"] = d.boundary();
  j["nu_weights"] = d.nu_weights();
  j["artificial"] = d.artificial();
  j["theta"] = d.theta();
  j["A"] = d.uniformity();
  json w;
  w["preset"] = d.window().preset;
  w["h"] = d.window().h;
  json poly = json::array();
  for (Point2 p : d.window().polygon) poly.push_back(point_json(p));
  w["polygon"] = std::move(poly);
  json segs = json::array();
  for (const auto& s : d.window().true_boundary) segs.push_back(json::array({point_json(s.a), point_json(s.b)}));
  w["segments"] = std::move(segs);
  j["window"] = std::move(w);
  return j;
}

inline Domain domain_from_json(const json& j) {
  try {
    Window w;
    if (j.contains("window")) {
      const auto& jw = j.at("window");
      w.preset = jw.value("preset", "");
      w.h = jw.value("h", 0.0);
      for (const auto& p : jw.value("polygon", json::array())) w.polygon.push_back(point_from_json(p));
      for (const auto& s : jw.value("segments", json::array())) {
        if (!s.is_array() || s.size() != 2) throw DataError("a segment must be a pair of points");
        w.true_boundary.push_back({point_from_json(s[0]), point_from_json(s[1])});
      }
    }
    Domain d = Domain::from_parts(space_from_json(j), j.at("boundary").get<std::vector<std::size_t>>(),
                                  j.at("nu_weights").get<std::vector<double>>(),
                                  j.value("artificial", std::vector<std::size_t>{}),
                                  j.at("theta").get<double>(), j.value("A", 1.0), std::move(w));
    if (j.contains("interior") && j["interior"].get<std::vector<std::size_t>>() != d.interior())
      throw DataError("domain JSON: interior list does not match the boundary split");
    return d;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed domain JSON: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw DataError("malformed JSON in " + path + ": " + e.what());
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << text;
}

inline json cover_to_json(const WhitneyCover& c) {
  json balls = json::array();
  for (const auto& b : c.balls) {
    json jb{{"level", b.level}, {"j", b.j}, {"center", b.center}, {"radius", num(b.radius)}};
    if (c.anchored) {
      jb["anchor"] = b.anchor;
      jb["u"] = b.u;
      jb["u_star_size"] = b.u_star.size();
      jb["flagged"] = b.flagged;
    }
    balls.push_back(std::move(jb));
  }
  return json{{"balls", std::move(balls)}, {"subgrid_balls", c.subgrid_balls}, {"warnings", c.warnings}};
}

// Field CSV: header `site_index,value`, one row per support site.
inline std::string field_to_csv(const ScalarField& f) {
  std::ostringstream os;
  os << "site_index,value\n";
  char buf[40];
  for (std::size_t s = 0; s < f.values.size(); ++s) {
    if (!std::isfinite(f.values[s])) continue;
    std::snprintf(buf, sizeof buf, "%.17g", f.values[s]);
    os << s << ',' << buf << '\n';
  }
  return os.str();
}

// Reads a field CSV against a domain; rows must cover exactly the sites of `support`.
inline ScalarField field_from_csv(const std::string& text, const Domain& dom, Support support) {
  ScalarField f;
  f.support = support;
  f.values.assign(dom.space().size(), std::nan(""));
  std::istringstream in(text);
  std::string line;
  std::size_t rows = 0, lineno = 0;
  std::vector<bool> seen(dom.space().size(), false);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("site_index", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw DataError("field CSV line " + std::to_string(lineno) + ": expected two columns");
    std::size_t site = 0;
    double value = 0.0;
    try {
      std::size_t used = 0;
      const std::string a = line.substr(0, comma);
      const long long s = std::stoll(a, &used);
      if (used != a.size() || s < 0) throw std::invalid_argument("index");
      site = static_cast<std::size_t>(s);
      value = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw DataError("field CSV line " + std::to_string(lineno) + ": unparsable row");
    }
    if (site >= dom.space().size()) throw DataError("field CSV: site index " + std::to_string(site) + " out of range");
    if (!in_support(dom, support, site))
      throw DataError("field CSV: site " + std::to_string(site) + " is outside the expected support");
    if (seen[site]) throw DataError("field CSV: duplicate site " + std::to_string(site));
    seen[site] = true;
    f.values[site] = value;
    ++rows;
  }
  std::size_t expected = 0;
  for (std::size_t s = 0; s < dom.space().size(); ++s) expected += in_support(dom, support, s);
  if (rows != expected)
    throw DataError("field CSV has " + std::to_string(rows) + " rows, domain expects " + std::to_string(expected));
  return f;
}

}  // namespace tracext
