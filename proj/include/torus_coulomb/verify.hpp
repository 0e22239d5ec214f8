#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "torus_coulomb/contours.hpp"
#include "torus_coulomb/dense.hpp"
#include "torus_coulomb/exact.hpp"
#include "torus_coulomb/greens.hpp"
#include "torus_coulomb/mc_cg.hpp"
#include "torus_coulomb/mc_dg.hpp"

// Numerical checks shared by the `verify` subcommand and the acceptance
// binary. Each check returns a pass/fail verdict and a one-line summary of
// the worst observed values.
namespace torus_coulomb::verify {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct Options {
  bool quick = false;
  std::uint64_t seed = 20240611;
  int workers = 1;
};

namespace detail {

template <class Body>
CriterionResult timed(int id, std::string name, Body&& body) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  const auto start = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + "exception: " + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

inline std::ostringstream sci() {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific;
  return os;
}

inline std::vector<int> random_neutral(int size, std::mt19937_64& rng, int range) {
  std::uniform_int_distribution<int> d(-range, range);
  std::vector<int> k(static_cast<std::size_t>(size));
  int sum = 0;
  for (std::size_t v = 1; v < k.size(); ++v) sum += (k[v] = d(rng));
  k[0] = -sum;
  return k;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Green function identities

struct GreenResiduals {
  double laplacian = 0.0;       ///< max |-1/4 (Delta G)_kj - (delta_kj - 1/N^2)|
  double reconstruction = 0.0;  ///< max |(reduced inverse) * Delta_{0c0c} - I|
  double quadratic = 0.0;       ///< max relative error of k^t G k vs -4 k^t Delta^{-1} k
};

inline double laplacian_residual(const GreenTable& g) {
  const TorusLattice& lat = g.lattice();
  const double inv = 1.0 / lat.size();
  double worst = 0.0;
  for (Vertex k = 0; k < lat.size(); ++k) {
    const auto row = lat.laplacian_row(k);
    for (Vertex j = 0; j < lat.size(); ++j) {
      double s = 0.0;
      for (const auto& [i, w] : row) s += w * g(i, j);
      worst = std::max(worst, std::abs(-0.25 * s - ((k == j ? 1.0 : 0.0) - inv)));
    }
  }
  return worst;
}

inline double reconstruction_residual(const GreenTable& g) {
  const TorusLattice& lat = g.lattice();
  const int m = lat.size() - 1;
  Eigen::MatrixXd inv(m, m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) inv(a, b) = reduced_inverse_entry(g, a + 1, b + 1);
  const Eigen::MatrixXd prod = inv * dense::reduced_laplacian(lat);
  return (prod - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
}

inline double quadratic_form_residual(const GreenTable& g, int vectors, std::mt19937_64& rng) {
  const TorusLattice& lat = g.lattice();
  const Eigen::LDLT<Eigen::MatrixXd> solver(dense::reduced_laplacian(lat));
  double worst = 0.0;
  for (int t = 0; t < vectors; ++t) {
    const auto k = detail::random_neutral(lat.size(), rng, 2);
    Eigen::VectorXd kc(lat.size() - 1);
    for (int a = 0; a < kc.size(); ++a) kc(a) = k[a + 1];
    const double rhs = -4.0 * kc.dot(solver.solve(kc));
    const double lhs = quadratic_form(g, k);
    if (rhs == 0.0 && lhs == 0.0) continue;
    worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
  }
  return worst;
}

inline CriterionResult green_identities(const Options& opt = {}) {
  return detail::timed(1, "Green identities", [&](CriterionResult& r) {
    const int max_n = opt.quick ? 8 : 16;
    std::mt19937_64 rng(opt.seed);
    GreenResiduals worst;
    for (int n = 2; n <= max_n; ++n) {
      const GreenTable g = compute_green(n);
      worst.laplacian = std::max(worst.laplacian, laplacian_residual(g));
      if (n <= 12) worst.reconstruction = std::max(worst.reconstruction, reconstruction_residual(g));
      worst.quadratic = std::max(worst.quadratic, quadratic_form_residual(g, 100, rng));
    }
    r.passed = worst.laplacian <= 1e-10 && worst.reconstruction <= 1e-8 && worst.quadratic <= 1e-10;
    auto os = detail::sci();
    os << "N=2.." << max_n << ": laplacian " << worst.laplacian << " (<=1e-10), reconstruction "
       << worst.reconstruction << " (<=1e-8), quadratic form " << worst.quadratic << " (<=1e-10)";
    r.detail = os.str();
  });
}

// ---------------------------------------------------------------------------
// Exact duality and cross identity

inline CriterionResult duality(const Options& opt = {}) {
  return detail::timed(2, "Duality", [&](CriterionResult& r) {
    struct Case {
      int n;
      double beta;
      exact::TruncationSpec trunc;
      double tol;
    };
    std::vector<Case> cases{{2, 0.5, {6, 4}, 1e-6}, {2, 1.0, {6, 4}, 1e-6}};
    if (!opt.quick) {
      cases.push_back({3, 0.75, {3, 3}, 1e-4});
      cases.push_back({3, 1.0, {3, 3}, 1e-4});
    }
    exact::EnumerationBudget budget;
    budget.workers = opt.workers;
    r.passed = true;
    auto os = detail::sci();
    for (const Case& c : cases) {
      const exact::DualityReport d = exact::duality_report(c.n, c.beta, c.trunc, budget);
      const bool ok = d.relative_gap <= c.tol;
      r.passed = r.passed && ok;
      os << (os.tellp() > 0 ? "; " : "") << "N=" << c.n << " beta=" << c.beta << " gap "
         << d.relative_gap << (ok ? "" : " FAIL");
    }
    r.detail = os.str();
  });
}

inline CriterionResult cross_identity(const Options& opt = {}) {
  return detail::timed(3, "Cross-model identity", [&](CriterionResult& r) {
    const TorusLattice lat(3);
    struct Case {
      double beta_star;
      Vertex i, j;
      exact::TruncationSpec trunc;
    };
    const std::vector<Case> cases{
        {1.0 / 12.0, lat.index({1, 0}), lat.index({2, 0}), {3, 5}},
        {1.0 / 12.0, lat.index({0, 0}), lat.index({1, 1}), {3, 5}},
        {1.0 / 8.0, lat.index({1, 0}), lat.index({2, 0}), {3, 5}},
        {1.0 / 8.0, lat.index({0, 0}), lat.index({1, 1}), {3, 5}},
    };
    exact::EnumerationBudget budget;
    budget.workers = opt.workers;
    r.passed = true;
    auto os = detail::sci();
    for (const Case& c : cases) {
      const exact::CrossIdentityReport x = exact::cross_identity(3, c.beta_star, c.i, c.j, c.trunc, budget);
      const bool ok = x.residual <= 1e-5;
      r.passed = r.passed && ok;
      const Vec2 a = lat.coord(c.i), b = lat.coord(c.j);
      os << (os.tellp() > 0 ? "; " : "") << "beta*=1/" << std::lround(1.0 / c.beta_star) << " ("
         << a.x << "," << a.y << ")-(" << b.x << "," << b.y << ") residual " << x.residual
         << (ok ? "" : " FAIL");
    }
    r.detail = os.str();
  });
}

// ---------------------------------------------------------------------------
// Contour properties

/// Failed properties for one configuration; empty when all hold.
inline std::string contour_violations(const TorusLattice& lat, const HeightConfig& x, Vertex i,
                                      Vertex j, contours::SeparationKind* kind = nullptr) {
  using namespace contours;
  const SeparatingContour sep = separating_contour(lat, x, i, j);
  if (kind) *kind = sep.kind;
  std::string bad;
  auto fail = [&](const std::string& what) { bad += (bad.empty() ? "" : ", ") + what; };

  const HeightConfig y = lower_map(lat, x, sep.inside_mask);
  for (int id = 0; id < lat.edge_count(); ++id) {
    const PrimalEdge e = lat.edge(id);
    const Vertex l = e.from, m = lat.edge_head(e);
    if (std::abs(y[l] - y[m]) != std::abs(x[l] - x[m]) - (sep.crosses(e) ? 1 : 0)) {
      fail("edge identity");
      break;
    }
  }
  if (hamiltonian(lat, x) - hamiltonian(lat, y) < sep.length) fail("energy inequality");

  const auto c_i = level_component_mask(lat, x, i);
  const std::span<const char> mask(c_i);
  if (boundary_balance(lat, mask) != Vec2{}) fail("balance");
  std::vector<Vec2> periods;
  for (const auto& c : boundary_contours(lat, mask)) {
    if (c.winding()) periods.push_back(c.period);
  }
  if (!(periods.empty() || (periods.size() == 2 && periods[0] + periods[1] == Vec2{}))) {
    fail("winding pair");
  }
  if (sep.kind == SeparationKind::winding_pair &&
      sep.contours[0].period + sep.contours[1].period != Vec2{}) {
    fail("winding pair");
  }
  return bad;
}

struct ContourSampleSummary {
  int side = 0;
  long samples = 0;
  long loops = 0;
  long winding_pairs = 0;
  long failures = 0;
  std::string first_failure;
};

/// Draw pinned configurations with heights uniform in [lo, hi] conditioned on
/// x_i > x_j for a uniformly chosen ordered pair, and check every property.
inline ContourSampleSummary contour_sample(int n, long samples, std::uint64_t seed, int lo = -3,
                                           int hi = 3) {
  const TorusLattice lat(n);
  contours::require_contour_lattice(lat);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Vertex> site(0, lat.size() - 1);
  ContourSampleSummary s;
  s.side = n;
  for (long t = 0; t < samples; ++t) {
    const Vertex i = site(rng);
    Vertex j = site(rng);
    while (j == i) j = site(rng);
    const HeightConfig x = contours::random_config_above(lat, rng, i, j, lo, hi);
    contours::SeparationKind kind{};
    std::string bad;
    try {
      bad = contour_violations(lat, x, i, j, &kind);
    } catch (const std::logic_error& e) {
      bad = e.what();
    }
    ++s.samples;
    (kind == contours::SeparationKind::loop ? s.loops : s.winding_pairs)++;
    if (!bad.empty()) {
      if (s.failures++ == 0) s.first_failure = "sample " + std::to_string(t) + ": " + bad;
    }
  }
  return s;
}

/// Same checks on snapshots of a discrete Gaussian chain at inverse
/// temperature beta; pairs with equal heights are skipped.
inline ContourSampleSummary contour_sample_mc(int n, long samples, double beta, std::uint64_t seed) {
  mc::DGChain chain(n, beta, seed);
  const TorusLattice& lat = chain.lattice();
  contours::require_contour_lattice(lat);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<Vertex> site(0, lat.size() - 1);
  for (int s = 0; s < 100; ++s) chain.sweep();
  ContourSampleSummary s;
  s.side = n;
  long attempts = 0;
  while (s.samples < samples) {
    if (++attempts > 1000 * samples) break;
    chain.sweep();
    Vertex i = site(rng), j = site(rng);
    const HeightConfig& x = chain.state();
    if (i == j || x[i] == x[j]) continue;
    if (x[i] < x[j]) std::swap(i, j);
    contours::SeparationKind kind{};
    std::string bad;
    try {
      bad = contour_violations(lat, x, i, j, &kind);
    } catch (const std::logic_error& e) {
      bad = e.what();
    }
    ++s.samples;
    (kind == contours::SeparationKind::loop ? s.loops : s.winding_pairs)++;
    if (!bad.empty() && s.failures++ == 0) s.first_failure = bad;
  }
  return s;
}

inline CriterionResult contour_exactness(const Options& opt = {}) {
  return detail::timed(4, "Contour exactness", [&](CriterionResult& r) {
    const std::vector<int> sides = opt.quick ? std::vector<int>{4} : std::vector<int>{4, 6};
    const long samples = opt.quick ? 1000 : 10000;
    r.passed = true;
    std::ostringstream os;
    for (int n : sides) {
      const ContourSampleSummary s = contour_sample(n, samples, opt.seed + n);
      r.passed = r.passed && s.failures == 0;
      os << (os.tellp() > 0 ? "; " : "") << "N=" << n << ": " << s.samples << " configs ("
         << s.loops << " loop, " << s.winding_pairs << " winding pair), " << s.failures
         << " failures";
      if (s.failures) os << " [" << s.first_failure << "]";
    }
    r.detail = os.str();
  });
}

inline CriterionResult contour_counting(const Options& opt = {}) {
  return detail::timed(5, "Contour counting bound", [&](CriterionResult& r) {
    const int max_len = opt.quick ? 8 : 10;
    r.passed = true;
    double worst_ratio = 0.0;
    std::ostringstream os;
    for (int n : {4, 6}) {
      const TorusLattice lat(n);
      for (Vec2 d : {Vec2{1, 0}, Vec2{2, 1}, Vec2{n / 2, n / 2}}) {
        const contours::ContourCounts c = contours::enumerate_separating_contours(lat, 0, lat.index(d), max_len);
        for (int l = 1; l <= max_len; ++l) {
          const double count = static_cast<double>(c.total(l));
          if (l < 4 && count != 0) {
            r.passed = false;
            os << "N=" << n << " l=" << l << " has " << count << " contours; ";
          }
          if (count > contours::counting_bound(l)) {
            r.passed = false;
            os << "N=" << n << " l=" << l << " exceeds bound; ";
          }
          worst_ratio = std::max(worst_ratio, count / contours::counting_bound(l));
        }
      }
    }
    auto tail = detail::sci();
    tail << "N in {4,6}, l<=" << max_len << ", 3 pairs each: max count/bound " << worst_ratio;
    r.detail = os.str() + tail.str();
  });
}

// ---------------------------------------------------------------------------
// Monte Carlo checks

inline std::vector<Vertex> pair_targets(const TorusLattice& lat) {
  return {lat.index({1, 0}), lat.index({2, 0}), lat.index({4, 0})};
}

inline CriterionResult peierls_mc(const Options& opt = {}) {
  return detail::timed(6, "Peierls bounds by MC", [&](CriterionResult& r) {
    const double beta = 3.0;
    const double p = contours::phi(beta);
    const double m = contours::m_beta(beta);
    const TorusLattice lat(8);
    r.passed = true;
    auto os = detail::sci();
    for (Vertex j : pair_targets(lat)) {
      mc::DGRunConfig cfg;
      cfg.side = 8;
      cfg.beta = beta;
      cfg.i = 0;
      cfg.j = j;
      cfg.sweeps = opt.quick ? 10000 : 100000;
      cfg.k_max = 3;
      cfg.seed = opt.seed + static_cast<std::uint64_t>(j);
      const mc::DGEstimate est = mc::dg_estimate(cfg);
      bool ok = true;
      for (int k = 1; k <= 3; ++k) {
        const mc::EstimateReport& t = est.at(mc::tail_name(k));
        ok = ok && t.estimate <= 2.0 * std::pow(p, k) + 3.0 * t.std_error;
      }
      const mc::EstimateReport& o = est.at("O_ij");
      ok = ok && o.estimate <= m + 3.0 * o.std_error;
      r.passed = r.passed && ok;
      os << (os.tellp() > 0 ? "; " : "") << "|i-j|=" << lat.coord(j).x << ": E[O] " << o.estimate
         << " (+-" << o.std_error << ", bound " << m << "), P(>=1) "
         << est.at(mc::tail_name(1)).estimate << " (bound " << 2 * p << ")" << (ok ? "" : " FAIL");
    }
    r.detail = os.str();
  });
}

inline CriterionResult sandwich_mc(const Options& opt = {}) {
  return detail::timed(7, "Variance sandwich by MC", [&](CriterionResult& r) {
    const TorusLattice lat(8);
    r.passed = true;
    auto os = detail::sci();
    for (Vertex j : pair_targets(lat)) {
      mc::CGRunConfig cfg;
      cfg.side = 8;
      cfg.beta_star = 1.0 / 12.0;
      cfg.i = 0;
      cfg.j = j;
      cfg.sweeps = opt.quick ? 10000 : 100000;
      cfg.seed = opt.seed + static_cast<std::uint64_t>(j);
      const mc::VarianceReport v = mc::cg_variance(cfg);
      const double var = v.second_moment - v.mean_voltage * v.mean_voltage;
      const double se = v.second_moment_error;
      const bool in = v.bounds_apply && var >= *v.lower_bound - 3.0 * se && var <= *v.upper_bound + 3.0 * se;
      const bool centred = std::abs(v.mean_voltage) <= 3.0 * v.mean_voltage_error;
      r.passed = r.passed && in && centred;
      os << (os.tellp() > 0 ? "; " : "") << "|i-j|=" << lat.coord(j).x << ": Var " << var << " (+-"
         << se << ") in [" << v.lower_bound.value_or(NAN) << ", " << v.upper_bound.value_or(NAN)
         << "], E[U] " << v.mean_voltage << " (+-" << v.mean_voltage_error << ")"
         << (in && centred ? "" : " FAIL");
    }
    r.detail = os.str();
  });
}

inline CriterionResult mc_vs_exact(const Options& opt = {}) {
  return detail::timed(8, "MC vs exact (N=3)", [&](CriterionResult& r) {
    const TorusLattice lat(3);
    const std::uint64_t sweeps = opt.quick ? 20000 : 200000;
    auto os = detail::sci();

    mc::DGRunConfig dg;
    dg.side = 3;
    dg.beta = 1.0;
    dg.i = lat.index({1, 0});
    dg.j = lat.index({2, 1});
    dg.sweeps = sweeps;
    dg.seed = opt.seed;
    const mc::EstimateReport o = mc::dg_estimate(dg).at("O_ij");
    const double o_exact = exact::dg_moment_Oij(3, dg.beta, dg.i, dg.j, {4, 0});
    const bool dg_ok = std::abs(o.estimate - o_exact) <= 3.0 * o.std_error;

    mc::CGRunConfig cg;
    cg.side = 3;
    cg.beta_star = 1.0 / 12.0;
    cg.i = lat.index({1, 0});
    cg.j = lat.index({2, 0});
    cg.sweeps = sweeps;
    cg.seed = opt.seed;
    const mc::VarianceReport v = mc::cg_variance(cg);
    const GreenTable g = compute_green(3);
    exact::EnumerationBudget budget;
    budget.workers = opt.workers;
    const exact::ChargeSums cs = exact::charge_sums(g, cg.beta_star, cg.i, cg.j, 4, budget);
    const double u2_exact = static_cast<double>(cs.voltage_sq / cs.partition);
    const bool cg_ok = std::abs(v.second_moment - u2_exact) <= 3.0 * v.second_moment_error;

    r.passed = dg_ok && cg_ok;
    os << "E[O] MC " << o.estimate << " +- " << o.std_error << " vs exact " << o_exact
       << (dg_ok ? "" : " FAIL") << "; E*[U^2] MC " << v.second_moment << " +- "
       << v.second_moment_error << " vs exact " << u2_exact << (cg_ok ? "" : " FAIL");
    r.detail = os.str();
  });
}

// ---------------------------------------------------------------------------

using Check = std::function<CriterionResult(const Options&)>;

inline std::vector<Check> all_checks() {
  return {green_identities, duality,    cross_identity, contour_exactness,
          contour_counting, peierls_mc, sandwich_mc,    mc_vs_exact};
}

/// Quick mode runs the fast structural subset: Green identities up to N = 8,
/// duality at N = 2 and a contour sample at N = 4.
inline std::vector<CriterionResult> run(const Options& opt,
                                        const std::function<void(const CriterionResult&)>& on_result = {}) {
  std::vector<Check> checks = all_checks();
  if (opt.quick) checks = {green_identities, duality, contour_exactness};
  std::vector<CriterionResult> out;
  for (const Check& c : checks) {
    out.push_back(c(opt));
    if (on_result) on_result(out.back());
  }
  return out;
}

inline std::string format_line(const CriterionResult& r) {
  std::ostringstream os;
  os.precision(1);
  os << std::fixed << "[" << (r.passed ? "PASS" : "FAIL") << "] " << r.id << ". " << r.name << " ("
     << r.seconds << " s): " << r.detail;
  return os.str();
}

}  // namespace torus_coulomb::verify
