#include "dentlab/io.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dentlab::io {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double read_p(const ordered_json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf" || s == "Inf" || s == "infinity") return kInf;
    throw ValidationError("metric: unknown p value '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace

Metric read_metric(const ordered_json& j) {
  Metric m;
  std::string kind = j.value("kind", "lp");
  if (kind == "lp") {
    m.kind = Metric::Kind::lp;
    m.p = j.contains("p") ? read_p(j.at("p")) : 2.0;
  } else if (kind == "table") {
    m.kind = Metric::Kind::table;
    for (const auto& row : j.at("rows")) m.rows.push_back(row.get<Vec>());
  } else {
    throw ValidationError("metric: unknown kind '" + kind + "'");
  }
  return m;
}

ordered_json metric_to_json(const Metric& m) {
  ordered_json j;
  if (m.kind == Metric::Kind::lp) {
    j["kind"] = "lp";
    if (std::isinf(m.p))
      j["p"] = "inf";
    else
      j["p"] = m.p;
  } else {
    j["kind"] = "table";
    j["rows"] = m.rows;
  }
  return j;
}

PointCloud read_cloud(const ordered_json& j) {
  PointCloud A;
  A.dim = j.at("dim").get<std::size_t>();
  for (const auto& p : j.at("points")) {
    LabeledPoint pt;
    pt.id = p.at("id").get<std::string>();
    pt.x = p.at("x").get<Vec>();
    A.points.push_back(std::move(pt));
  }
  A.validate();
  return A;
}

ordered_json cloud_to_json(const PointCloud& A) {
  ordered_json j;
  j["dim"] = A.dim;
  j["points"] = ordered_json::array();
  for (const auto& pt : A.points) j["points"].push_back({{"id", pt.id}, {"x", pt.x}});
  return j;
}

ScoredMap read_scored_map(const ordered_json& j) {
  ScoredMap f;
  f.domain = read_cloud(j);
  if (j.contains("metric")) f.metric = read_metric(j.at("metric"));
  bool any_values = false;
  for (const auto& p : j.at("points")) {
    if (p.contains("f")) {
      any_values = true;
      const auto& fv = p.at("f");
      if (fv.is_number())
        f.values.push_back({fv.get<double>()});
      else
        f.values.push_back(fv.get<Vec>());
    } else if (any_values) {
      throw ValidationError("map: point '" + p.at("id").get<std::string>() + "' is missing its value");
    }
  }
  f.validate();
  return f;
}

ScoredMap read_scored_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file '" + path + "'");
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
  return read_scored_map(j);
}

ordered_json scored_map_to_json(const ScoredMap& f) {
  ordered_json j;
  j["dim"] = f.domain.dim;
  j["points"] = ordered_json::array();
  for (std::size_t i = 0; i < f.domain.size(); ++i) {
    ordered_json p = {{"id", f.domain.points[i].id}, {"x", f.domain.points[i].x}};
    if (i < f.values.size()) {
      if (f.values[i].size() == 1)
        p["f"] = f.values[i][0];
      else
        p["f"] = f.values[i];
    }
    j["points"].push_back(p);
  }
  j["metric"] = metric_to_json(f.metric);
  return j;
}

ordered_json tolerances_to_json(const Tolerances& t) {
  ordered_json j;
  j["sep_tol"] = t.sep_tol;
  j["osc_tol"] = t.osc_tol;
  j["budget"] = t.budget;
  j["exact_cap"] = t.exact_cap;
  j["t_schedule_len"] = t.t_schedule.size();
  j["t_min"] = t.t_schedule.back();
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CapacityError("cannot write output file '" + path + "'");
  out << content;
  if (!out.good()) throw CapacityError("failed writing output file '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace dentlab::io
