#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "torus_coulomb/contours.hpp"
#include "torus_coulomb/exact.hpp"
#include "torus_coulomb/greens.hpp"
#include "torus_coulomb/mc_cg.hpp"
#include "torus_coulomb/mc_dg.hpp"
#include "torus_coulomb/parallel.hpp"
#include "torus_coulomb/verify.hpp"

namespace torus_coulomb::cli {

using json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kVerificationFailed = 1, kUsage = 2 };

/// Error in user input that should end with exit status 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a run can be configured with; unset members stay empty.
struct RunConfig {
  std::string subcommand;
  int n = 0;
  std::optional<double> beta;
  std::optional<double> beta_star;
  std::string i = "1,0";
  std::string j = "0,0";
  int kx = 3;
  int km = 3;
  int max_len = 8;
  long samples = 1000;
  int k_max = 5;
  std::uint64_t sweeps = 100000;
  std::optional<std::uint64_t> burn_in;
  std::uint64_t seed = 1;
  int chains = 1;
  std::string proposal = "nn";
  std::string out;
  std::string format;
  std::string config_file;
  bool budget_override = false;
  bool quick = false;
  std::optional<std::uint64_t> check_seed;  ///< verify only; default keeps the built-in seed
};

/// Parse "x,y" into a vertex of the lattice; coordinates are taken mod N.
inline Vertex parse_site(const TorusLattice& lat, const std::string& text, const char* flag) {
  int x = 0, y = 0;
  char comma = 0;
  std::istringstream is(text);
  if (!(is >> x >> comma >> y) || comma != ',' || !(is >> std::ws).eof()) {
    throw UsageError(std::string("--") + flag + " expects coordinates \"x,y\", got \"" + text + "\"");
  }
  return lat.index({x, y});
}

inline json site_json(const TorusLattice& lat, Vertex v) {
  const Vec2 c = lat.coord(v);
  return json::array({c.x, c.y});
}

/// Resolve the temperature pair; exactly one of beta, beta* may be given.
struct Temperatures {
  double beta = 0.0;
  double beta_star = 0.0;
};

inline Temperatures resolve_temperatures(const RunConfig& cfg, std::ostream& err, bool need_star) {
  if (cfg.beta && cfg.beta_star) throw UsageError("give either --beta or --beta-star, not both");
  if (!cfg.beta && !cfg.beta_star) {
    throw UsageError(need_star ? "--beta-star (or --beta) is required" : "--beta (or --beta-star) is required");
  }
  Temperatures t;
  if (cfg.beta) {
    if (!(*cfg.beta > 0)) throw UsageError("--beta must be positive");
    t.beta = *cfg.beta;
    t.beta_star = 1.0 / (4.0 * t.beta);
    err << "beta* = " << std::setprecision(6) << t.beta_star << " (from beta = " << t.beta << ")\n";
  } else {
    if (!(*cfg.beta_star > 0)) throw UsageError("--beta-star must be positive");
    t.beta_star = *cfg.beta_star;
    t.beta = 1.0 / (4.0 * t.beta_star);
    err << "beta = " << std::setprecision(6) << t.beta << " (from beta* = " << t.beta_star << ")\n";
  }
  return t;
}

inline json config_json(const RunConfig& cfg, const std::optional<Temperatures>& t) {
  json c;
  c["subcommand"] = cfg.subcommand;
  c["n"] = cfg.n;
  if (t) {
    c["beta"] = t->beta;
    c["beta_star"] = t->beta_star;
  }
  return c;
}

/// Write to --out or to the given stream.
template <class Writer>
void emit(const RunConfig& cfg, std::ostream& out, Writer&& write) {
  if (cfg.out.empty()) {
    write(out);
    return;
  }
  std::ofstream file(cfg.out);
  if (!file) throw UsageError("cannot open --out file " + cfg.out);
  write(file);
}

inline void check_format(const RunConfig& cfg, std::initializer_list<const char*> allowed) {
  for (const char* f : allowed) {
    if (cfg.format == f) return;
  }
  std::string list;
  for (const char* f : allowed) list += std::string(list.empty() ? "" : "|") + f;
  throw UsageError("--format must be one of " + list + " for " + cfg.subcommand);
}

inline exact::EnumerationBudget budget_for(const RunConfig& cfg) {
  exact::EnumerationBudget b;
  b.override_limit = cfg.budget_override;
  b.workers = max_workers();
  return b;
}

// ---------------------------------------------------------------------------
// Subcommand bodies

inline int run_greens(RunConfig& cfg, std::ostream& out) {
  if (cfg.format.empty()) cfg.format = "csv";
  check_format(cfg, {"csv", "json"});
  const GreenTable g = compute_green(cfg.n);
  const int n = cfg.n;
  emit(cfg, out, [&](std::ostream& os) {
    os << std::setprecision(17);
    if (cfg.format == "csv") {
      os << "dx,dy,g,g0_minus_g\n";
      for (int dy = 0; dy < n; ++dy)
        for (int dx = 0; dx < n; ++dx) {
          os << dx << ',' << dy << ',' << g.at({dx, dy}) << ',' << g.at({0, 0}) - g.at({dx, dy}) << '\n';
        }
      return;
    }
    json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config_json(cfg, std::nullopt);
    json values = json::array();
    for (int dy = 0; dy < n; ++dy)
      for (int dx = 0; dx < n; ++dx) {
        values.push_back({{"dx", dx}, {"dy", dy}, {"g", g.at({dx, dy})}, {"g0_minus_g", g.at({0, 0}) - g.at({dx, dy})}});
      }
    j["values"] = values;
    os << j.dump(2) << '\n';
  });
  return kOk;
}

inline int run_exact_duality(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.format.empty()) cfg.format = "json";
  check_format(cfg, {"json"});
  const Temperatures t = resolve_temperatures(cfg, err, false);
  const exact::DualityReport r = exact::duality_report(cfg.n, t.beta, {cfg.kx, cfg.km}, budget_for(cfg));
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_json(cfg, t);
  j["config"]["kx"] = cfg.kx;
  j["config"]["km"] = cfg.km;
  j["config"]["budget_override"] = cfg.budget_override;
  j["Z"] = r.lhs;
  j["prefactor"] = r.prefactor;
  j["Z_star"] = r.rhs_partition;
  j["relative_gap"] = r.relative_gap;
  j["height_tail_estimate"] = r.height_tail;
  j["charge_tail_estimate"] = r.charge_tail;
  emit(cfg, out, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  return kOk;
}

inline int run_exact_cross(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.format.empty()) cfg.format = "json";
  check_format(cfg, {"json"});
  const Temperatures t = resolve_temperatures(cfg, err, true);
  const TorusLattice lat(cfg.n);
  const Vertex i = parse_site(lat, cfg.i, "i"), j = parse_site(lat, cfg.j, "j");
  const exact::CrossIdentityReport r = exact::cross_identity(cfg.n, t.beta_star, i, j, {cfg.kx, cfg.km}, budget_for(cfg));
  json o;
  o["schema_version"] = kSchemaVersion;
  o["config"] = config_json(cfg, t);
  o["config"]["i"] = site_json(lat, i);
  o["config"]["j"] = site_json(lat, j);
  o["config"]["kx"] = cfg.kx;
  o["config"]["km"] = cfg.km;
  o["config"]["budget_override"] = cfg.budget_override;
  o["voltage_second_moment"] = r.voltage_second_moment;
  o["height_moment"] = r.height_moment;
  o["potential_diff"] = r.potential_diff;
  o["predicted"] = r.predicted;
  o["residual"] = r.residual;
  o["truncation_error_estimate"] = r.truncation_error_estimate;
  emit(cfg, out, [&](std::ostream& os) { os << o.dump(2) << '\n'; });
  return kOk;
}

inline json contour_json(const TorusLattice& lat, const contours::Contour& c) {
  json edges = json::array();
  for (const auto& e : c.edges) {
    edges.push_back({{"tail", {e.tail.x, e.tail.y}},
                     {"head", {e.head.x, e.head.y}},
                     {"left", site_json(lat, lat.left_vertex(e))},
                     {"right", site_json(lat, lat.right_vertex(e))}});
  }
  return {{"length", c.length()}, {"period", {c.period.x, c.period.y}}, {"edges", edges}};
}

inline int run_contours_extract(RunConfig& cfg, std::ostream& out) {
  if (cfg.format.empty()) cfg.format = "json";
  check_format(cfg, {"json"});
  const TorusLattice lat(cfg.n);
  contours::require_contour_lattice(lat);
  const Vertex i = parse_site(lat, cfg.i, "i"), j = parse_site(lat, cfg.j, "j");
  if (i == j) throw UsageError("--i and --j must be different sites");
  std::mt19937_64 rng(cfg.seed);
  const HeightConfig x = contours::random_config_above(lat, rng, i, j, -3, 3);
  const contours::SeparatingContour sep = contours::separating_contour(lat, x, i, j);
  json o;
  o["schema_version"] = kSchemaVersion;
  o["config"] = config_json(cfg, std::nullopt);
  o["config"]["i"] = site_json(lat, i);
  o["config"]["j"] = site_json(lat, j);
  o["config"]["seed"] = cfg.seed;
  json rows = json::array();
  for (int y = 0; y < cfg.n; ++y) {
    json row = json::array();
    for (int xx = 0; xx < cfg.n; ++xx) row.push_back(x[lat.index({xx, y})]);
    rows.push_back(row);
  }
  o["heights"] = rows;
  o["kind"] = contours::to_string(sep.kind);
  o["length"] = sep.length;
  json cs = json::array();
  for (const auto& c : sep.contours) cs.push_back(contour_json(lat, c));
  o["contours"] = cs;
  json inside = json::array();
  for (Vertex v : sep.inside) inside.push_back(site_json(lat, v));
  o["inside"] = inside;
  emit(cfg, out, [&](std::ostream& os) { os << o.dump(2) << '\n'; });
  return kOk;
}

inline int run_contours_enumerate(RunConfig& cfg, std::ostream& out) {
  if (cfg.format.empty()) cfg.format = "csv";
  check_format(cfg, {"csv", "json"});
  const TorusLattice lat(cfg.n);
  const Vertex i = parse_site(lat, cfg.i, "i"), j = parse_site(lat, cfg.j, "j");
  if (i == j) throw UsageError("--i and --j must be different sites");
  const contours::ContourCounts c = contours::enumerate_separating_contours(
      lat, i, j, cfg.max_len, cfg.budget_override ? 1e18 : 1e9);
  emit(cfg, out, [&](std::ostream& os) {
    if (cfg.format == "csv") {
      os << "length,loops,winding_pairs,total,bound\n";
      for (int l = 1; l <= cfg.max_len; ++l) {
        os << l << ',' << c.loops.at(l) << ',' << c.winding_pairs.at(l) << ',' << c.total(l) << ','
           << std::setprecision(17) << contours::counting_bound(l) << '\n';
      }
      return;
    }
    json o;
    o["schema_version"] = kSchemaVersion;
    o["config"] = config_json(cfg, std::nullopt);
    o["config"]["i"] = site_json(lat, i);
    o["config"]["j"] = site_json(lat, j);
    o["config"]["max_len"] = cfg.max_len;
    json rows = json::array();
    for (int l = 1; l <= cfg.max_len; ++l) {
      rows.push_back({{"length", l}, {"loops", c.loops.at(l)}, {"winding_pairs", c.winding_pairs.at(l)},
                      {"total", c.total(l)}, {"bound", contours::counting_bound(l)}});
    }
    o["counts"] = rows;
    os << o.dump(2) << '\n';
  });
  return kOk;
}

inline int run_contours_verify(RunConfig& cfg, std::ostream& out) {
  if (cfg.format.empty()) cfg.format = "json";
  check_format(cfg, {"json"});
  const verify::ContourSampleSummary s =
      cfg.beta ? verify::contour_sample_mc(cfg.n, cfg.samples, *cfg.beta, cfg.seed)
               : verify::contour_sample(cfg.n, cfg.samples, cfg.seed);
  json o;
  o["schema_version"] = kSchemaVersion;
  o["config"] = config_json(cfg, std::nullopt);
  o["config"]["samples"] = cfg.samples;
  o["config"]["seed"] = cfg.seed;
  o["config"]["source"] = cfg.beta ? "dg_chain" : "uniform[-3,3]";
  if (cfg.beta) o["config"]["beta"] = *cfg.beta;
  o["checked"] = s.samples;
  o["loops"] = s.loops;
  o["winding_pairs"] = s.winding_pairs;
  o["failures"] = s.failures;
  if (s.failures) o["first_failure"] = s.first_failure;
  o["passed"] = s.failures == 0;
  emit(cfg, out, [&](std::ostream& os) { os << o.dump(2) << '\n'; });
  return s.failures == 0 ? kOk : kVerificationFailed;
}

inline void write_estimate_csv(std::ostream& os, const std::string& name, double estimate, double se,
                               std::uint64_t sweeps, std::uint64_t seed) {
  os << name << ',' << estimate << ',' << se << ',' << sweeps << ',' << seed << '\n';
}

inline int run_dg(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.format.empty()) cfg.format = "csv";
  check_format(cfg, {"csv", "json"});
  const Temperatures t = resolve_temperatures(cfg, err, false);
  const TorusLattice lat(cfg.n);
  mc::DGRunConfig run;
  run.side = cfg.n;
  run.beta = t.beta;
  run.i = parse_site(lat, cfg.i, "i");
  run.j = parse_site(lat, cfg.j, "j");
  run.sweeps = cfg.sweeps;
  run.burn_in = cfg.burn_in;
  run.seed = cfg.seed;
  run.chains = cfg.chains;
  run.k_max = cfg.k_max;
  run.workers = std::min(cfg.chains, max_workers());
  const mc::DGEstimate est = mc::dg_estimate(run);
  emit(cfg, out, [&](std::ostream& os) {
    os << std::setprecision(12);
    if (cfg.format == "csv") {
      os << "observable,estimate,stderr,sweeps,seed\n";
      for (const auto& o : est.observables) write_estimate_csv(os, o.observable, o.estimate, o.std_error, o.sweeps, o.seed);
      return;
    }
    json o;
    o["schema_version"] = kSchemaVersion;
    o["config"] = config_json(cfg, t);
    o["config"]["i"] = site_json(lat, run.i);
    o["config"]["j"] = site_json(lat, run.j);
    o["config"]["sweeps"] = run.sweeps;
    o["config"]["burn_in"] = est.burn_in;
    o["config"]["seed"] = run.seed;
    o["config"]["chains"] = run.chains;
    o["config"]["k_max"] = run.k_max;
    o["config"]["batches"] = run.batches;
    o["acceptance_rate"] = est.acceptance_rate;
    json obs = json::array();
    for (const auto& e : est.observables) {
      obs.push_back({{"observable", e.observable}, {"estimate", e.estimate}, {"stderr", e.std_error}});
    }
    o["observables"] = obs;
    const double p = contours::phi(t.beta);
    o["phi"] = p;
    if (p < 1.0) o["m_beta"] = contours::m_beta(t.beta);
    os << o.dump(2) << '\n';
  });
  return kOk;
}

inline int run_cg(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.format.empty()) cfg.format = "csv";
  check_format(cfg, {"csv", "json"});
  const Temperatures t = resolve_temperatures(cfg, err, true);
  const TorusLattice lat(cfg.n);
  mc::CGRunConfig run;
  run.side = cfg.n;
  run.beta_star = t.beta_star;
  run.i = parse_site(lat, cfg.i, "i");
  run.j = parse_site(lat, cfg.j, "j");
  run.sweeps = cfg.sweeps;
  run.burn_in = cfg.burn_in;
  run.seed = cfg.seed;
  run.chains = cfg.chains;
  run.workers = std::min(cfg.chains, max_workers());
  if (cfg.proposal == "nn") {
    run.proposal = mc::DipoleProposal::nearest_neighbor;
  } else if (cfg.proposal == "uniform") {
    run.proposal = mc::DipoleProposal::uniform_pair;
  } else {
    throw UsageError("--proposal must be nn or uniform");
  }
  const mc::VarianceReport r = mc::cg_variance(run);
  if (!r.warning.empty()) err << "warning: " << r.warning << '\n';
  const double var = r.second_moment - r.mean_voltage * r.mean_voltage;
  emit(cfg, out, [&](std::ostream& os) {
    os << std::setprecision(12);
    if (cfg.format == "csv") {
      os << "observable,estimate,stderr,sweeps,seed\n";
      write_estimate_csv(os, "U_ij^2", r.second_moment, r.second_moment_error, run.sweeps, run.seed);
      write_estimate_csv(os, "U_ij", r.mean_voltage, r.mean_voltage_error, run.sweeps, run.seed);
      write_estimate_csv(os, "U_ij^3", r.third_moment, r.third_moment_error, run.sweeps, run.seed);
      write_estimate_csv(os, "Var(U_ij)", var, r.second_moment_error, run.sweeps, run.seed);
      return;
    }
    json o;
    o["schema_version"] = kSchemaVersion;
    o["config"] = config_json(cfg, t);
    o["config"]["i"] = site_json(lat, run.i);
    o["config"]["j"] = site_json(lat, run.j);
    o["config"]["sweeps"] = run.sweeps;
    o["config"]["burn_in"] = r.burn_in;
    o["config"]["seed"] = run.seed;
    o["config"]["chains"] = run.chains;
    o["config"]["batches"] = run.batches;
    o["config"]["proposal"] = mc::to_string(run.proposal);
    o["acceptance_rate"] = r.acceptance_rate;
    o["second_moment"] = {{"estimate", r.second_moment}, {"stderr", r.second_moment_error}};
    o["mean"] = {{"estimate", r.mean_voltage}, {"stderr", r.mean_voltage_error}};
    o["third_moment"] = {{"estimate", r.third_moment}, {"stderr", r.third_moment_error}};
    o["variance"] = {{"estimate", var}, {"stderr", r.second_moment_error}};
    o["potential_diff"] = r.potential_diff;
    o["spin_wave_value"] = 4.0 / t.beta_star * r.potential_diff;
    o["bounds_apply"] = r.bounds_apply;
    if (r.lower_bound) o["lower_bound"] = *r.lower_bound;
    if (r.upper_bound) o["upper_bound"] = *r.upper_bound;
    if (!r.warning.empty()) o["warning"] = r.warning;
    os << o.dump(2) << '\n';
  });
  return kOk;
}

inline int run_verify(RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (cfg.format.empty()) cfg.format = "text";
  check_format(cfg, {"text", "json"});
  verify::Options opt;
  opt.quick = cfg.quick;
  opt.workers = max_workers();
  if (cfg.check_seed) opt.seed = *cfg.check_seed;
  std::ostream& progress = cfg.format == "text" && cfg.out.empty() ? out : err;
  const auto results = verify::run(opt, [&](const verify::CriterionResult& r) {
    progress << verify::format_line(r) << std::endl;
  });
  const bool all = std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
  emit(cfg, out, [&](std::ostream& os) {
    if (cfg.format == "text") {
      if (!cfg.out.empty()) {
        for (const auto& r : results) os << verify::format_line(r) << '\n';
      }
      os << (all ? "verify: all checks passed" : "verify: FAILED") << '\n';
      return;
    }
    json o;
    o["schema_version"] = kSchemaVersion;
    o["config"] = {{"subcommand", "verify"}, {"quick", opt.quick}, {"seed", opt.seed}};
    json rs = json::array();
    for (const auto& r : results) {
      rs.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed}, {"seconds", r.seconds}, {"detail", r.detail}});
    }
    o["criteria"] = rs;
    o["passed"] = all;
    os << o.dump(2) << '\n';
  });
  return all ? kOk : kVerificationFailed;
}

// ---------------------------------------------------------------------------
// Argument handling

/// Read a flat key=value file into "--key value" tokens. Blank lines and
/// lines starting with '#' are ignored; a bare key or "key=true" becomes a flag.
inline std::vector<std::string> read_config_tokens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read --config file " + path);
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    std::string key = trim(line.substr(0, eq));
    std::string value = eq == std::string::npos ? "true" : trim(line.substr(eq + 1));
    if (key.rfind("--", 0) == 0) key = key.substr(2);
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw UsageError(path + ":" + std::to_string(lineno) + ": missing key");
    if (key == "config") throw UsageError(path + ": nested config files are not supported");
    if (value == "true" && (key == "budget-override" || key == "quick")) {
      tokens.push_back("--" + key);
    } else if (value != "false") {
      tokens.push_back("--" + key);
      tokens.push_back(value);
    }
  }
  return tokens;
}

inline std::string flag_name(const std::string& token) {
  if (token.rfind("--", 0) != 0) return {};
  const auto eq = token.find('=');
  return token.substr(2, eq == std::string::npos ? std::string::npos : eq - 2);
}

/// Splice config-file tokens in front of the flags given on the command
/// line (after the subcommand words) so that explicit flags win. A
/// temperature flag on the command line drops both temperature keys from
/// the file.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::string path;
  std::vector<std::string> rest;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config") {
      if (k + 1 >= args.size()) throw UsageError("--config needs a file name");
      path = args[++k];
    } else if (args[k].rfind("--config=", 0) == 0) {
      path = args[k].substr(9);
    } else {
      rest.push_back(args[k]);
    }
  }
  if (path.empty()) return rest;
  std::vector<std::string> file = read_config_tokens(path);

  std::vector<std::string> given;
  for (const auto& a : rest) {
    if (auto f = flag_name(a); !f.empty()) given.push_back(f);
  }
  const bool cli_temperature = std::any_of(given.begin(), given.end(), [](const std::string& f) {
    return f == "beta" || f == "beta-star";
  });
  std::vector<std::string> kept;
  for (std::size_t k = 0; k < file.size(); ++k) {
    const std::string f = flag_name(file[k]);
    const bool has_value = k + 1 < file.size() && flag_name(file[k + 1]).empty();
    const bool overridden = std::find(given.begin(), given.end(), f) != given.end() ||
                            (cli_temperature && (f == "beta" || f == "beta-star"));
    if (!overridden) {
      kept.push_back(file[k]);
      if (has_value) kept.push_back(file[k + 1]);
    }
    if (has_value) ++k;
  }
  std::size_t words = 0;
  while (words < rest.size() && rest[words].rfind("-", 0) != 0) ++words;
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(words), kept.begin(), kept.end());
  return rest;
}

inline void add_common(CLI::App* app, RunConfig& cfg, bool temperature, bool sites) {
  app->add_option("--n", cfg.n, "torus side length N")->required()->check(CLI::Range(2, 1 << 20));
  if (temperature) {
    auto* b = app->add_option("--beta", cfg.beta, "inverse temperature of the height model");
    auto* bs = app->add_option("--beta-star", cfg.beta_star, "inverse temperature of the Coulomb gas, 1/(4 beta)");
    b->excludes(bs);
  }
  if (sites) {
    app->add_option("--i", cfg.i, "first site as x,y")->capture_default_str();
    app->add_option("--j", cfg.j, "second site as x,y")->capture_default_str();
  }
  app->add_option("--out", cfg.out, "output file (default: stdout)");
  app->add_option("--format", cfg.format, "output format");
}

inline void add_mc(CLI::App* app, RunConfig& cfg) {
  app->add_option("--sweeps", cfg.sweeps, "measurement sweeps per chain")->capture_default_str();
  app->add_option("--burn-in", cfg.burn_in, "burn-in sweeps (default: max(sweeps/10, 1000))");
  app->add_option("--seed", cfg.seed, "seed of the first chain")->capture_default_str();
  app->add_option("--chains", cfg.chains, "independent chains, seeds seed..seed+C-1")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

/// Entry point shared by the binary and the tests. `args` excludes the
/// program name.
inline int parse_and_dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Discrete Gaussian / Coulomb gas duality toolkit on the N x N torus", "torus-coulomb"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.add_option("--config", cfg.config_file, "flat key=value file; explicit flags override it");

  auto* greens = app.add_subcommand("greens", "dump g(d) over all displacements");
  add_common(greens, cfg, false, false);

  auto* exact_cmd = app.add_subcommand("exact", "truncated exact sums at small N");
  exact_cmd->require_subcommand(1);
  auto* duality = exact_cmd->add_subcommand("duality", "compare Z with its dual representation");
  add_common(duality, cfg, true, false);
  auto* cross = exact_cmd->add_subcommand("cross-identity", "check the voltage/height moment identity");
  add_common(cross, cfg, true, true);
  for (auto* c : {duality, cross}) {
    c->add_option("--kx", cfg.kx, "height cutoff K_x")->check(CLI::NonNegativeNumber)->capture_default_str();
    c->add_option("--km", cfg.km, "charge cutoff K_m")->check(CLI::NonNegativeNumber)->capture_default_str();
    c->add_flag("--budget-override", cfg.budget_override, "allow more than 1e9 summand evaluations");
  }

  auto* contours_cmd = app.add_subcommand("contours", "separating contours of height configurations");
  contours_cmd->require_subcommand(1);
  auto* extract = contours_cmd->add_subcommand("extract", "separating contour of a random configuration");
  add_common(extract, cfg, false, true);
  extract->add_option("--seed", cfg.seed)->capture_default_str();
  auto* enumerate = contours_cmd->add_subcommand("enumerate", "count separating contours by length");
  add_common(enumerate, cfg, false, true);
  enumerate->add_option("--max-len", cfg.max_len)->check(CLI::NonNegativeNumber)->capture_default_str();
  enumerate->add_flag("--budget-override", cfg.budget_override, "lift the search-size limit");
  auto* cverify = contours_cmd->add_subcommand("verify", "check the lowering map on sampled configurations");
  add_common(cverify, cfg, false, false);
  cverify->add_option("--samples", cfg.samples)->check(CLI::PositiveNumber)->capture_default_str();
  cverify->add_option("--beta", cfg.beta, "sample from the height chain at this beta instead of uniformly");
  cverify->add_option("--seed", cfg.seed)->capture_default_str();

  auto* dg = app.add_subcommand("dg", "Metropolis estimates for the discrete Gaussian model");
  add_common(dg, cfg, true, true);
  add_mc(dg, cfg);
  dg->add_option("--k-max", cfg.k_max, "largest k for P(|x_i-x_j|>=k)")->check(CLI::PositiveNumber)->capture_default_str();

  auto* cg = app.add_subcommand("cg", "Metropolis estimates for the Coulomb gas");
  add_common(cg, cfg, true, true);
  add_mc(cg, cfg);
  cg->add_option("--proposal", cfg.proposal, "dipole proposal")
      ->check(CLI::IsMember({"nn", "uniform"}))
      ->capture_default_str();

  auto* ver = app.add_subcommand("verify", "run the acceptance checks");
  ver->add_flag("--quick", cfg.quick, "fast structural subset");
  ver->add_option("--seed", cfg.check_seed, "seed for randomised checks");
  ver->add_option("--out", cfg.out, "output file");
  ver->add_option("--format", cfg.format, "text or json");

  try {
    std::vector<std::string> expanded = expand_config(std::move(args));
    std::reverse(expanded.begin(), expanded.end());
    app.parse(expanded);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (greens->parsed()) {
      cfg.subcommand = "greens";
      return run_greens(cfg, out);
    }
    if (duality->parsed()) {
      cfg.subcommand = "exact duality";
      return run_exact_duality(cfg, out, err);
    }
    if (cross->parsed()) {
      cfg.subcommand = "exact cross-identity";
      return run_exact_cross(cfg, out, err);
    }
    if (extract->parsed()) {
      cfg.subcommand = "contours extract";
      return run_contours_extract(cfg, out);
    }
    if (enumerate->parsed()) {
      cfg.subcommand = "contours enumerate";
      return run_contours_enumerate(cfg, out);
    }
    if (cverify->parsed()) {
      cfg.subcommand = "contours verify";
      return run_contours_verify(cfg, out);
    }
    if (dg->parsed()) {
      cfg.subcommand = "dg";
      return run_dg(cfg, out, err);
    }
    if (cg->parsed()) {
      cfg.subcommand = "cg";
      return run_cg(cfg, out, err);
    }
    cfg.subcommand = "verify";
    return run_verify(cfg, out, err);
  } catch (const exact::BudgetExceeded& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kVerificationFailed;
  }
}

inline int parse_and_dispatch(int argc, char** argv, std::ostream& out, std::ostream& err) {
  return parse_and_dispatch(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

}  // namespace torus_coulomb::cli
