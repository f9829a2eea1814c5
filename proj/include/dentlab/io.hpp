#pragma once

#include "dentlab/types.hpp"

#include <nlohmann/json_fwd.hpp>

#include <string>

namespace dentlab::io {

using ordered_json = nlohmann::ordered_json;

// Shortest round-trip decimal form, stable across runs; "inf"/"-inf" for
// infinities so CSV and JSON stay parseable.
std::string fmt_double(double v);

// Cloud/map schema:
//   {"dim": d,
//    "points": [{"id": "p0", "x": [...], "f": [...] or number}, ...],
//    "metric": {"kind": "lp", "p": 2 | 1 | "inf"} | {"kind": "table", "rows": [[...]]}}
// "f" rows are required with lp metrics and optional with table metrics.
ScoredMap read_scored_map(const ordered_json& j);
ScoredMap read_scored_map_file(const std::string& path);
ordered_json scored_map_to_json(const ScoredMap& f);

PointCloud read_cloud(const ordered_json& j);
ordered_json cloud_to_json(const PointCloud& A);

ordered_json metric_to_json(const Metric& m);
Metric read_metric(const ordered_json& j);

ordered_json tolerances_to_json(const Tolerances& t);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace dentlab::io
