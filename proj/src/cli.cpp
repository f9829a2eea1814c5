#include "dentlab/cli.hpp"

#include "dentlab/generators.hpp"
#include "dentlab/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>

namespace dentlab::cli {

namespace {

using io::fmt_double;
using io::ordered_json;

// Reports stay strict JSON, so non-finite numbers are emitted as the strings
// fmt_double produces ("inf", "-inf", "nan") rather than as null.
ordered_json json_num(double v) {
  if (std::isfinite(v)) return v;
  return fmt_double(v);
}

ordered_json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open input file '" + path + "'");
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path + "': " + e.what());
  }
}

// Instances may be bare clouds; those are read as the identity map under the
// file's metric (default l2), so geometric examples feed every subcommand.
ScoredMap load_map(const std::string& path) {
  ordered_json j = parse_json_file(path);
  bool any_values = false;
  if (j.contains("points") && j.at("points").is_array())
    for (const auto& p : j.at("points"))
      if (p.contains("f")) {
        any_values = true;
        break;
      }
  bool table = j.contains("metric") && j.at("metric").is_object() &&
               j.at("metric").value("kind", "") == "table";
  if (any_values || table) return io::read_scored_map(j);
  ScoredMap f;
  f.domain = io::read_cloud(j);
  if (j.contains("metric")) f.metric = io::read_metric(j.at("metric"));
  for (const auto& pt : f.domain.points) f.values.push_back(pt.x);
  f.validate();
  return f;
}

int parse_threads() {
  const char* env = std::getenv("DENTLAB_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 1 || v > 4096)
    throw ValidationError("DENTLAB_THREADS must be a positive integer, got '" + std::string(env) +
                          "'");
  return static_cast<int>(v);
}

// Per-subcommand option storage. Tolerances resolve in three layers:
// defaults, then the optional --config file, then explicit flags.
struct Common {
  std::string input, out, config;
  std::string emit = "json";
  std::uint64_t seed = 1;
  double sep_tol = 0.0, osc_tol = 0.0;
  std::size_t budget = 0, exact_cap = 0;
  std::vector<double> t_schedule;
  CLI::Option* o_sep = nullptr;
  CLI::Option* o_osc = nullptr;
  CLI::Option* o_budget = nullptr;
  CLI::Option* o_cap = nullptr;
  CLI::Option* o_ts = nullptr;

  void attach(CLI::App* sub, bool with_input, std::uint64_t seed_default = 1) {
    seed = seed_default;
    if (with_input)
      sub->add_option("--input", input, "instance JSON (cloud or scored map)")
          ->required()
          ->check(CLI::ExistingFile);
    sub->add_option("--out", out, "write the JSON report here instead of stdout");
    sub->add_option("--emit", emit, "json: report only; csv: also write the CSV sidecar")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--seed", seed, "seed for the seeded searches");
    sub->add_option("--config", config, "JSON file with tolerance fields; explicit flags win")
        ->check(CLI::ExistingFile);
    o_sep = sub->add_option("--sep-tol", sep_tol, "hull membership slack")
                ->check(CLI::PositiveNumber);
    o_osc = sub->add_option("--osc-tol", osc_tol, "oscillation comparison slack")
                ->check(CLI::PositiveNumber);
    o_budget = sub->add_option("--budget", budget, "candidate directions per search");
    o_cap = sub->add_option("--exact-cap", exact_cap,
                            "override the exact enumeration size cap (0: default policy)");
    o_ts = sub->add_option("--t-schedule", t_schedule, "slice depths, strictly decreasing")
               ->delimiter(',');
  }

  Tolerances resolve_tolerances() const {
    Tolerances t = Tolerances::defaults();
    if (!config.empty()) {
      ordered_json j = parse_json_file(config);
      if (!j.is_object()) throw ValidationError("config: expected a JSON object");
      for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "sep_tol")
          t.sep_tol = it.value().get<double>();
        else if (k == "osc_tol")
          t.osc_tol = it.value().get<double>();
        else if (k == "budget")
          t.budget = it.value().get<std::size_t>();
        else if (k == "exact_cap")
          t.exact_cap = it.value().get<std::size_t>();
        else if (k == "t_schedule")
          t.t_schedule = it.value().get<std::vector<double>>();
        else
          throw ValidationError("config: unknown key '" + k + "'");
      }
    }
    if (o_sep->count()) t.sep_tol = sep_tol;
    if (o_osc->count()) t.osc_tol = osc_tol;
    if (o_budget->count()) t.budget = budget;
    if (o_cap->count()) t.exact_cap = exact_cap;
    if (o_ts->count()) t.t_schedule = t_schedule;
    t.validate();
    return t;
  }
};

ordered_json report_header(const std::string& command, const Common& c, const Tolerances& tol,
                           int threads) {
  ordered_json h;
  h["tool"] = "dentlab";
  h["command"] = command;
  if (!c.input.empty()) h["input"] = c.input;
  h["seed"] = c.seed;
  // Recorded from DENTLAB_THREADS for the run log; every algorithm runs
  // single-threaded so reports stay byte-identical regardless.
  h["threads"] = threads;
  h["tolerances"] = io::tolerances_to_json(tol);
  return h;
}

std::string csv_base(const std::string& out) {
  const std::string suffix = ".json";
  if (out.size() > suffix.size() &&
      out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0)
    return out.substr(0, out.size() - suffix.size());
  return out;
}

void emit(const Common& c, ordered_json& rep,
          const std::vector<std::pair<std::string, std::string>>& csvs) {
  if (c.emit == "csv") {
    if (c.out.empty()) throw ValidationError("--emit csv requires --out");
    ordered_json names = ordered_json::array();
    for (const auto& [suffix, content] : csvs) {
      std::string path = csv_base(c.out) + suffix;
      io::write_text_file(path, content);
      names.push_back(path);
    }
    rep["csv_files"] = names;
  }
  std::string text = rep.dump(2);
  text.push_back('\n');
  if (c.out.empty())
    std::cout << text;
  else
    io::write_text_file(c.out, text);
}

DeriveMode parse_mode(const std::string& s) {
  return s == "cluster" ? DeriveMode::cluster : DeriveMode::exact;
}

IndexSet full_index_set(std::size_t n) {
  IndexSet A(n);
  std::iota(A.begin(), A.end(), std::size_t{0});
  return A;
}

ordered_json slice_json(const ScoredMap& f, const Slice& s) {
  ordered_json j;
  j["u"] = s.functional.coeffs;
  j["depth"] = json_num(s.depth);
  ordered_json ids = ordered_json::array();
  for (auto i : s.members) ids.push_back(f.domain.points[i].id);
  j["members"] = ids;
  j["oscillation"] = json_num(oscillation(f, s.members));
  return j;
}

ordered_json stages_json(const ScoredMap& f, const std::vector<DerivationStage>& stages) {
  ordered_json arr = ordered_json::array();
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& st = stages[k];
    ordered_json sj;
    sj["stage"] = k + 1;
    ordered_json ids = ordered_json::array();
    for (auto i : st.survivors) ids.push_back(f.domain.points[i].id);
    sj["survivors"] = ids;
    ordered_json rem = ordered_json::array();
    for (const auto& [idx, w] : st.removal_witnesses) {
      ordered_json r;
      r["id"] = f.domain.points[idx].id;
      r["witness"] = slice_json(f, w);
      rem.push_back(r);
    }
    sj["removed"] = rem;
    arr.push_back(sj);
  }
  return arr;
}

int cmd_dent_index(const Common& c, double eps, const std::string& mode_s, int threads) {
  Tolerances tol = c.resolve_tolerances();
  ScoredMap f = load_map(c.input);
  DerivationTrace tr = dz_index(f, eps, parse_mode(mode_s), tol);
  ordered_json rep = report_header("dent-index", c, tol, threads);
  rep["epsilon"] = eps;
  rep["mode"] = mode_s;
  rep["stalled"] = tr.stalled;
  if (tr.stalled)
    rep["stalled_at"] = tr.stalled_at;
  else
    rep["dz"] = tr.dz;
  rep["stages"] = stages_json(f, tr.stages);
  std::vector<std::pair<std::string, std::string>> csvs;
  if (c.emit == "csv") csvs.emplace_back(".stages.csv", stages_csv(f, tr));
  emit(c, rep, csvs);
  return 0;
}

int cmd_derive(const Common& c, double eps, const std::string& mode_s, int steps, int threads) {
  Tolerances tol = c.resolve_tolerances();
  ScoredMap f = load_map(c.input);
  DeriveMode mode = parse_mode(mode_s);
  IndexSet D = full_index_set(f.domain.size());
  std::vector<DerivationStage> stages;
  bool stalled = false;
  for (int k = 0; k < steps && !D.empty(); ++k) {
    DerivationStage st = derive_once(f, D, eps, mode, tol);
    stages.push_back(st);
    if (st.survivors == D) {
      stalled = true;
      break;
    }
    D = st.survivors;
  }
  ordered_json rep = report_header("derive", c, tol, threads);
  rep["epsilon"] = eps;
  rep["mode"] = mode_s;
  rep["steps_requested"] = steps;
  rep["steps_run"] = stages.size();
  rep["stalled"] = stalled;
  rep["survivors_after"] = D.size();
  rep["stages"] = stages_json(f, stages);
  std::vector<std::pair<std::string, std::string>> csvs;
  if (c.emit == "csv") {
    DerivationTrace tr;
    tr.stages = stages;
    csvs.emplace_back(".stages.csv", stages_csv(f, tr));
  }
  emit(c, rep, csvs);
  return 0;
}

int cmd_ss_scan(const Common& c, int dirs, double eps, int threads) {
  Tolerances tol = c.resolve_tolerances();
  ScoredMap f = load_map(c.input);
  SsScanStats st = ss_density_scan(f, full_index_set(f.domain.size()), dirs, eps, tol, c.seed);
  ordered_json rep = report_header("ss-scan", c, tol, threads);
  rep["directions"] = dirs;
  rep["epsilon"] = eps;
  rep["success_fraction"] = json_num(st.success_fraction);
  rep["max_perturbation"] = json_num(st.max_perturbation);
  ordered_json rows = ordered_json::array();
  for (const auto& r : st.rows) {
    ordered_json rj;
    rj["direction_index"] = r.direction_index;
    rj["success"] = r.success;
    rj["perturbation_norm"] = json_num(r.perturbation_norm);
    rj["achieved_osc"] = json_num(r.achieved_osc);
    rj["slice_depth"] = json_num(r.slice_depth);
    rows.push_back(rj);
  }
  rep["rows"] = rows;
  std::vector<std::pair<std::string, std::string>> csvs;
  if (c.emit == "csv") csvs.emplace_back(".scan.csv", scan_csv(st));
  emit(c, rep, csvs);
  return 0;
}

int cmd_dc_approx(const Common& c, std::vector<int> n_list, double grid_mesh, int trials,
                  int threads) {
  Tolerances tol = c.resolve_tolerances();
  ScoredMap f = load_map(c.input);
  if (!f.real_valued()) throw ValidationError("dc-approx: the input map must be real-valued");
  std::sort(n_list.begin(), n_list.end());
  n_list.erase(std::unique(n_list.begin(), n_list.end()), n_list.end());
  if (n_list.empty()) throw ValidationError("dc-approx: empty --n-list");
  double mesh = grid_mesh;
  if (mesh <= 0.0) {
    double extent = 0.0;
    for (std::size_t d = 0; d < f.domain.dim; ++d) {
      double lo = kInf, hi = -kInf;
      for (const auto& pt : f.domain.points) {
        lo = std::min(lo, pt.x[d]);
        hi = std::max(hi, pt.x[d]);
      }
      extent = std::max(extent, hi - lo);
    }
    mesh = extent > 0.0 ? extent / 64.0 : 1.0;
  }
  PointCloud grid = default_eval_grid(f.domain, mesh, tol);
  ordered_json rep = report_header("dc-approx", c, tol, threads);
  rep["grid_points"] = grid.size();
  rep["grid_mesh"] = mesh;
  rep["n_list"] = n_list;
  rep["trials"] = trials;
  ordered_json splits = ordered_json::array();
  for (int n : n_list) {
    DcApproximant a = moreau_envelope(f, n, grid);
    DcSplitReport r = dc_split_check(a, trials, tol, c.seed);
    ordered_json sj;
    sj["n"] = n;
    sj["pass"] = r.pass;
    sj["identity_violations"] = r.identity_violations;
    sj["midpoint_violations"] = r.midpoint_violations;
    sj["lipschitz_violations"] = r.lipschitz_violations;
    sj["midpoint_tests"] = r.midpoint_tests;
    sj["max_identity_gap"] = json_num(r.max_identity_gap);
    sj["worst_midpoint_defect"] = json_num(r.worst_midpoint_defect);
    sj["lipschitz_bound"] = json_num(r.lipschitz_bound);
    sj["max_slope_g"] = json_num(r.max_slope_g);
    sj["max_slope_h"] = json_num(r.max_slope_h);
    splits.push_back(sj);
  }
  rep["splits"] = splits;
  std::vector<ErrorCurveRow> curve = uniform_error_curve(f, n_list);
  ordered_json cj = ordered_json::array();
  for (const auto& row : curve) {
    ordered_json rj;
    rj["n"] = row.n;
    rj["sup_error"] = json_num(row.sup_error);
    rj["theory_bound"] = json_num(row.theory_bound);
    cj.push_back(rj);
  }
  rep["curve"] = cj;
  std::vector<std::pair<std::string, std::string>> csvs;
  if (c.emit == "csv") csvs.emplace_back(".curve.csv", curve_csv(curve));
  emit(c, rep, csvs);
  return 0;
}

int cmd_renorm_check(const Common& c, int K, double eps, const std::string& mode_s, int trials,
                     int threads) {
  Tolerances tol = c.resolve_tolerances();
  ScoredMap f = load_map(c.input);
  RenormFunction R = build_renorm(f, K, parse_mode(mode_s), tol);
  DropReport d = midpoint_drop_check(R, f, eps, trials, tol, c.seed);
  ordered_json rep = report_header("renorm-check", c, tol, threads);
  rep["k"] = K;
  rep["mode"] = mode_s;
  rep["epsilon"] = eps;
  rep["trials"] = trials;
  rep["n_k"] = R.n_k;
  rep["sampled"] = d.sampled;
  rep["qualifying"] = d.qualifying;
  rep["violations"] = d.violations;
  rep["consistency_violations"] = d.consistency_violations;
  rep["drop"] = json_num(d.drop);
  rep["delta"] = json_num(d.delta);
  rep["dz"] = d.dz;
  rep["min_margin"] = json_num(d.min_margin);
  rep["vacuous"] = d.vacuous;
  rep["pass"] = d.pass;
  emit(c, rep, {});
  return 0;
}

int cmd_gen_example(const Common& c, const std::string& shape, std::size_t d, std::size_t n,
                    std::size_t tree_depth, std::size_t branching, double eps_tree, double slack,
                    double sigma) {
  ordered_json j;
  ordered_json meta;
  meta["tool"] = "dentlab";
  meta["command"] = "gen-example";
  meta["shape"] = shape;
  meta["seed"] = c.seed;
  if (shape == "grid" || shape == "simplex" || shape == "ball" || shape == "square") {
    Shape sh = shape == "grid"      ? Shape::grid
               : shape == "simplex" ? Shape::simplex
               : shape == "ball"    ? Shape::ball
                                    : Shape::square;
    PointCloud A = gen_standard(sh, d, n, c.seed);
    j = io::cloud_to_json(A);
    meta["d"] = d;
    meta["n"] = n;
  } else {
    TreeSpec spec;
    spec.depth = tree_depth;
    spec.eps_tree = eps_tree;
    spec.branching = branching;
    spec.slack = slack;
    spec.seed = c.seed;
    TreeExample t = gen_tree(spec);
    meta["tree_depth"] = tree_depth;
    meta["branching"] = branching;
    meta["eps_tree"] = eps_tree;
    meta["slack"] = slack;
    if (shape == "tree") {
      // The instance of record: the identity map on the tree cloud under the
      // sup metric, so both derivations and the martingale run consume it.
      ScoredMap ident;
      ident.domain = t.cloud;
      ident.metric.kind = Metric::Kind::lp;
      ident.metric.p = kInf;
      for (const auto& pt : t.cloud.points) ident.values.push_back(pt.x);
      ident.validate();
      j = io::scored_map_to_json(ident);
      j["level"] = t.level;
      j["parent"] = t.parent;
    } else if (shape == "norm-one") {
      ScoredMap f = gen_norm_one_map(t.f, kInf);
      j = io::scored_map_to_json(f);
    } else if (shape == "sep-metric") {
      if (sigma <= 0.0 || sigma > 1.0)
        throw ValidationError("gen-example: --sigma must lie in (0, 1]");
      meta["sigma"] = sigma;
      std::vector<Functional> us;
      for (std::size_t k = 0; k < t.cloud.dim; ++k) {
        Functional u;
        u.coeffs.assign(t.cloud.dim, 0.0);
        u.coeffs[k] = sigma;
        us.push_back(u);
      }
      SepMetricResult r = gen_sep_metric(t.cloud, us);
      j = io::cloud_to_json(t.cloud);
      j["metric"] = io::metric_to_json(r.metric);
      j["separating"] = r.separating;
    } else {
      throw ValidationError("gen-example: unknown shape '" + shape + "'");
    }
  }
  j["generator"] = meta;
  std::string text = j.dump(2);
  text.push_back('\n');
  if (c.out.empty())
    std::cout << text;
  else
    io::write_text_file(c.out, text);
  return 0;
}

int cmd_martingale(const Common& c, double eps, int depth, int threads) {
  Tolerances tol = c.resolve_tolerances();
  ScoredMap f = load_map(c.input);
  MartingaleRun m = martingale_run(f, eps, depth, tol);
  ordered_json rep = report_header("martingale", c, tol, threads);
  rep["epsilon"] = eps;
  rep["depth"] = depth;
  // The dyadic construction keeps every step eps-separated while the
  // conditional-expectation residuals sum below eps/16, which certifies the
  // corrected martingale at the reported bound.
  rep["implied_martingale_bound"] = eps / 2.0;
  ordered_json levels = ordered_json::array();
  for (const auto& level : m.levels) {
    ordered_json lv = ordered_json::array();
    for (const auto& iv : level) {
      ordered_json ij;
      ij["lo"] = iv.lo.str();
      ij["hi"] = iv.hi.str();
      ij["value"] = f.domain.points[iv.value].id;
      lv.push_back(ij);
    }
    levels.push_back(lv);
  }
  rep["levels"] = levels;
  auto num_array = [](const std::vector<double>& v) {
    ordered_json a = ordered_json::array();
    for (double x : v) a.push_back(json_num(x));
    return a;
  };
  rep["residuals"] = num_array(m.residuals);
  rep["residual_bounds"] = num_array(m.residual_bounds);
  rep["separations"] = num_array(m.separations);
  rep["min_step_dist"] = num_array(m.min_step_dist);
  rep["weight_residuals"] = num_array(m.weight_residuals);
  rep["residual_sum"] = json_num(m.residual_sum);
  rep["refinement_ok"] = m.refinement_ok;
  rep["measurable_ok"] = m.measurable_ok;
  rep["pass"] = m.pass;
  emit(c, rep, {});
  return 0;
}

int cmd_equi_slice(const Common& c, double eps, int threads) {
  Tolerances tol = c.resolve_tolerances();
  ScoredMap F = load_map(c.input);
  if (F.values.empty())
    throw ValidationError("equi-slice: the input map must carry explicit values");
  std::size_t m = F.values.front().size();
  std::vector<ScoredMap> fs;
  for (std::size_t comp = 0; comp < m; ++comp) {
    ScoredMap g;
    g.domain = F.domain;
    g.metric.kind = Metric::Kind::lp;
    g.metric.p = 2.0;
    for (const auto& v : F.values) g.values.push_back({v[comp]});
    g.validate();
    fs.push_back(std::move(g));
  }
  IndexSet A = full_index_set(F.domain.size());
  FindSliceResult r = equi_slice(fs, A, eps, tol, c.seed);
  ordered_json rep = report_header("equi-slice", c, tol, threads);
  rep["components"] = m;
  rep["epsilon"] = eps;
  rep["status"] = r.status == FindSliceResult::Status::found            ? "found"
                  : r.status == FindSliceResult::Status::none_certified ? "none_certified"
                                                                        : "unknown";
  rep["achieved_osc"] = json_num(r.achieved_osc);
  if (r.status == FindSliceResult::Status::found) {
    ScoredMap pm = product_map(fs);
    rep["slice"] = slice_json(pm, r.slice);
    ordered_json comp_osc = ordered_json::array();
    for (const auto& g : fs) comp_osc.push_back(json_num(oscillation(g, r.slice.members)));
    rep["component_oscillations"] = comp_osc;
  }
  emit(c, rep, {});
  return 0;
}

}  // namespace

std::string stages_csv(const ScoredMap& f, const DerivationTrace& trace) {
  std::string s = "stage,survivors,max_witness_osc\n";
  for (std::size_t k = 0; k < trace.stages.size(); ++k) {
    const auto& st = trace.stages[k];
    double mx = -kInf;
    for (const auto& [idx, w] : st.removal_witnesses)
      mx = std::max(mx, oscillation(f, w.members));
    s += std::to_string(k + 1) + "," + std::to_string(st.survivors.size()) + "," +
         (st.removal_witnesses.empty() ? "nan" : fmt_double(mx)) + "\n";
  }
  return s;
}

std::string scan_csv(const SsScanStats& stats) {
  std::string s = "direction_index,success,perturbation_norm,achieved_osc,slice_depth\n";
  for (const auto& r : stats.rows)
    s += std::to_string(r.direction_index) + "," + (r.success ? "1" : "0") + "," +
         fmt_double(r.perturbation_norm) + "," + fmt_double(r.achieved_osc) + "," +
         fmt_double(r.slice_depth) + "\n";
  return s;
}

std::string curve_csv(const std::vector<ErrorCurveRow>& rows) {
  std::string s = "n,sup_error,theory_bound\n";
  for (const auto& r : rows)
    s += std::to_string(r.n) + "," + fmt_double(r.sup_error) + "," + fmt_double(r.theory_bound) +
         "\n";
  return s;
}

std::string profile_csv(const SlicingProfile& profile) {
  std::string s = "t,oscillation\n";
  for (const auto& [t, osc] : profile.samples) s += fmt_double(t) + "," + fmt_double(osc) + "\n";
  return s;
}

int run(int argc, const char* const* argv) {
  CLI::App app{"dentlab: dentability, slicing and dc approximation on finite point clouds"};
  app.require_subcommand(1);

  Common c_dent, c_derive, c_scan, c_dc, c_renorm, c_gen, c_mart, c_equi;

  auto* s_dent = app.add_subcommand("dent-index", "full derivation: index or stall certificate");
  c_dent.attach(s_dent, true);
  double dent_eps = 0.0;
  std::string dent_mode = "exact";
  s_dent->add_option("--eps", dent_eps, "oscillation threshold")
      ->required()
      ->check(CLI::PositiveNumber);
  s_dent->add_option("--mode", dent_mode, "exact | cluster")
      ->check(CLI::IsMember({"exact", "cluster"}));

  auto* s_derive = app.add_subcommand("derive", "a fixed number of derivation steps");
  c_derive.attach(s_derive, true);
  double derive_eps = 0.0;
  std::string derive_mode = "exact";
  int derive_steps = 1;
  s_derive->add_option("--eps", derive_eps, "oscillation threshold")
      ->required()
      ->check(CLI::PositiveNumber);
  s_derive->add_option("--mode", derive_mode, "exact | cluster")
      ->check(CLI::IsMember({"exact", "cluster"}));
  s_derive->add_option("--steps", derive_steps, "derivation steps to run")
      ->check(CLI::Range(1, 1000000));

  auto* s_scan = app.add_subcommand("ss-scan", "perturbation success density over directions");
  c_scan.attach(s_scan, true);
  int scan_dirs = 64;
  double scan_eps = 0.0;
  s_scan->add_option("--dirs", scan_dirs, "number of sampled directions")
      ->check(CLI::Range(1, 100000));
  s_scan->add_option("--eps", scan_eps, "perturbation radius and oscillation target")
      ->required()
      ->check(CLI::PositiveNumber);

  auto* s_dc = app.add_subcommand("dc-approx", "Moreau envelopes with verified dc splits");
  c_dc.attach(s_dc, true);
  std::vector<int> dc_n_list = {1, 2, 4, 8, 16};
  double dc_mesh = 0.0;
  int dc_trials = 256;
  s_dc->add_option("--n-list", dc_n_list, "envelope parameters, comma separated")
      ->delimiter(',')
      ->check(CLI::Range(1, 1 << 26));
  s_dc->add_option("--grid-mesh", dc_mesh, "evaluation lattice spacing (0: extent/64)")
      ->check(CLI::NonNegativeNumber);
  s_dc->add_option("--trials", dc_trials, "random midpoint tests per split")
      ->check(CLI::Range(0, 10000000));

  auto* s_renorm = app.add_subcommand("renorm-check", "dyadic renorm with the midpoint drop");
  c_renorm.attach(s_renorm, true);
  int renorm_k = 3, renorm_trials = 1000;
  double renorm_eps = 0.5;
  std::string renorm_mode = "exact";
  s_renorm->add_option("--k", renorm_k, "number of dyadic scales")->check(CLI::Range(1, 60));
  s_renorm->add_option("--eps", renorm_eps, "value separation for tested pairs")
      ->check(CLI::PositiveNumber);
  s_renorm->add_option("--mode", renorm_mode, "exact | cluster")
      ->check(CLI::IsMember({"exact", "cluster"}));
  s_renorm->add_option("--trials", renorm_trials, "sampled pairs")
      ->check(CLI::Range(1, 10000000));

  auto* s_gen = app.add_subcommand("gen-example", "write a standard instance");
  c_gen.attach(s_gen, false, 7);
  std::string gen_shape;
  std::size_t gen_d = 1, gen_n = 21, gen_depth = 2, gen_branching = 2;
  double gen_eps_tree = 1.0, gen_slack = 0.0, gen_sigma = 0.25;
  s_gen->add_option("--shape", gen_shape, "grid | simplex | ball | square | tree | norm-one | sep-metric")
      ->required()
      ->check(CLI::IsMember({"grid", "simplex", "ball", "square", "tree", "norm-one", "sep-metric"}));
  s_gen->add_option("--d", gen_d, "ambient dimension")->check(CLI::Range(1, 64));
  s_gen->add_option("--n", gen_n, "per-shape size parameter");
  s_gen->add_option("--tree-depth", gen_depth, "tree depth")->check(CLI::Range(1, 12));
  s_gen->add_option("--branching", gen_branching, "children per node")->check(CLI::Range(2, 64));
  s_gen->add_option("--eps-tree", gen_eps_tree, "node separation")->check(CLI::PositiveNumber);
  s_gen->add_option("--slack", gen_slack, "averaging jitter in [0, 1]")
      ->check(CLI::Range(0.0, 1.0));
  s_gen->add_option("--sigma", gen_sigma, "functional scale for sep-metric");

  auto* s_mart = app.add_subcommand("martingale", "dyadic decomposition over a stalled derivation");
  c_mart.attach(s_mart, true);
  double mart_eps = 0.0;
  int mart_depth = 3;
  s_mart->add_option("--eps", mart_eps, "separation threshold")
      ->required()
      ->check(CLI::PositiveNumber);
  s_mart->add_option("--depth", mart_depth, "number of refinement levels")
      ->check(CLI::Range(0, 64));

  auto* s_equi = app.add_subcommand("equi-slice", "one slice small for every component");
  c_equi.attach(s_equi, true);
  double equi_eps = 0.0;
  s_equi->add_option("--eps", equi_eps, "oscillation target")
      ->required()
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    int threads = parse_threads();
    if (s_dent->parsed()) return cmd_dent_index(c_dent, dent_eps, dent_mode, threads);
    if (s_derive->parsed())
      return cmd_derive(c_derive, derive_eps, derive_mode, derive_steps, threads);
    if (s_scan->parsed()) return cmd_ss_scan(c_scan, scan_dirs, scan_eps, threads);
    if (s_dc->parsed()) return cmd_dc_approx(c_dc, dc_n_list, dc_mesh, dc_trials, threads);
    if (s_renorm->parsed())
      return cmd_renorm_check(c_renorm, renorm_k, renorm_eps, renorm_mode, renorm_trials, threads);
    if (s_gen->parsed())
      return cmd_gen_example(c_gen, gen_shape, gen_d, gen_n, gen_depth, gen_branching,
                             gen_eps_tree, gen_slack, gen_sigma);
    if (s_mart->parsed()) return cmd_martingale(c_mart, mart_eps, mart_depth, threads);
    if (s_equi->parsed()) return cmd_equi_slice(c_equi, equi_eps, threads);
  } catch (const CapacityError& e) {
    std::cerr << "capacity: " << e.what() << "\n";
    return 3;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: input schema: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> full;
  full.reserve(args.size() + 1);
  full.push_back("dentlab");
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  argv.reserve(full.size());
  for (const auto& s : full) argv.push_back(s.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace dentlab::cli
