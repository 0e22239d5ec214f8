#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "torus_coulomb/dense.hpp"
#include "torus_coulomb/greens.hpp"
#include "torus_coulomb/height_config.hpp"
#include "torus_coulomb/lattice.hpp"
#include "torus_coulomb/parallel.hpp"

// Brute-force truncated sums for both partition functions. These are the
// ground truth for the Monte Carlo modules and only feasible for N in {2, 3}.

namespace torus_coulomb::exact {

struct TruncationSpec {
  int height_cutoff = 0;  ///< heights restricted to [-K_x, K_x]
  int charge_cutoff = 0;  ///< free charges m_l restricted to [-K_m, K_m]
};

struct EnumerationBudget {
  double max_evaluations = 1e9;
  bool override_limit = false;
  int workers = 1;
};

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(double required, double limit)
      : std::runtime_error(message(required, limit)), required_(required), limit_(limit) {}

  double required() const { return required_; }
  double limit() const { return limit_; }

 private:
  static std::string message(double required, double limit) {
    std::ostringstream os;
    os << "enumeration needs " << required << " Boltzmann-factor evaluations, budget is " << limit
       << " (raise the budget or pass --budget-override)";
    return os.str();
  }
  double required_;
  double limit_;
};

/// (2K + 1)^(N^2 - 1): number of configurations over the free coordinates.
inline double configuration_count(const TorusLattice& lat, int cutoff) {
  return std::pow(2.0 * cutoff + 1.0, lat.size() - 1);
}

inline void check_budget(const TorusLattice& lat, int cutoff, const EnumerationBudget& budget) {
  if (cutoff < 0) throw std::invalid_argument("truncation cutoffs must be >= 0");
  const double required = configuration_count(lat, cutoff);
  if (!budget.override_limit && required > budget.max_evaluations) {
    throw BudgetExceeded(required, budget.max_evaluations);
  }
}

/// Odometer enumeration of [-K, K]^(Lambda \ {0}). The most significant
/// digit (last vertex) splits the range into 2K + 1 slices that may be
/// processed concurrently; slice sums are reduced in slice order, so the
/// result does not depend on the worker count.
///
/// `State` must provide set(span<const int>), shift(Vertex, int), visit()
/// and sums(); the Sums type needs operator+= and value-initialisation.
template <class MakeState>
auto odometer_sum(const TorusLattice& lat, int cutoff, const EnumerationBudget& budget,
                  MakeState make_state) {
  check_budget(lat, cutoff, budget);
  using State = decltype(make_state());
  using Sums = decltype(std::declval<State&>().sums());
  const int top = lat.size() - 1;
  const int slices = 2 * cutoff + 1;
  // Re-derive cached quantities from scratch whenever a carry reaches this digit.
  const int resync_digit = std::min(top, 4);
  std::vector<Sums> partial(static_cast<std::size_t>(slices));

  parallel_tasks(slices, budget.workers, [&](int slice) {
    State state = make_state();
    std::vector<int> vals(static_cast<std::size_t>(lat.size()), -cutoff);
    vals[0] = 0;
    vals[top] = slice - cutoff;
    state.set(vals);
    while (true) {
      state.visit();
      int d = 1;
      while (d < top) {
        if (vals[d] < cutoff) {
          ++vals[d];
          if (d >= resync_digit) {
            state.set(vals);
          } else {
            state.shift(d, +1);
          }
          break;
        }
        if (d < resync_digit && cutoff > 0) state.shift(d, -2 * cutoff);
        vals[d] = -cutoff;
        ++d;
      }
      if (d == top) break;
    }
    partial[static_cast<std::size_t>(slice)] = state.sums();
  });

  Sums total{};
  for (const Sums& s : partial) total += s;
  return total;
}

// ---------------------------------------------------------------------------
// Discrete Gaussian side

struct HeightSums {
  long double partition = 0;
  long double moment = 0;  ///< sum of (x_i - x_j)^2 e^{-beta H}

  HeightSums& operator+=(const HeightSums& o) {
    partition += o.partition;
    moment += o.moment;
    return *this;
  }
};

class HeightWalker {
 public:
  HeightWalker(const TorusLattice& lat, double beta, Vertex i, Vertex j)
      : lat_(lat), beta_(beta), i_(i), j_(j), x_(static_cast<std::size_t>(lat.size()), 0) {}

  void set(std::span<const int> vals) {
    x_.assign(vals.begin(), vals.end());
    x_[0] = 0;
    energy_ = hamiltonian(lat_, x_);
  }
  void shift(Vertex v, int delta) {
    energy_ += local_energy_change(lat_, x_, v, delta);
    x_[v] += delta;
  }
  void visit() {
    const double w = std::exp(-beta_ * static_cast<double>(energy_));
    const long d = x_[i_] - x_[j_];
    sums_.partition += w;
    sums_.moment += static_cast<long double>(w * static_cast<double>(d * d));
  }
  HeightSums sums() const { return sums_; }

 private:
  const TorusLattice& lat_;
  double beta_;
  Vertex i_, j_;
  std::vector<int> x_;
  long energy_ = 0;
  HeightSums sums_;
};

inline HeightSums height_sums(const TorusLattice& lat, double beta, Vertex i, Vertex j,
                              int cutoff, const EnumerationBudget& budget = {}) {
  if (!(beta > 0)) throw std::invalid_argument("beta must be > 0");
  lat.check(i);
  lat.check(j);
  return odometer_sum(lat, cutoff, budget, [&] { return HeightWalker(lat, beta, i, j); });
}

/// Truncated Z_{Lambda, beta}.
inline double dg_partition(int n, double beta, const TruncationSpec& trunc,
                           const EnumerationBudget& budget = {}) {
  const TorusLattice lat(n);
  return static_cast<double>(height_sums(lat, beta, 0, 0, trunc.height_cutoff, budget).partition);
}

/// Truncated E_{Lambda, beta}[(x_i - x_j)^2].
inline double dg_moment_Oij(int n, double beta, Vertex i, Vertex j, const TruncationSpec& trunc,
                            const EnumerationBudget& budget = {}) {
  const TorusLattice lat(n);
  const HeightSums s = height_sums(lat, beta, i, j, trunc.height_cutoff, budget);
  return static_cast<double>(s.moment / s.partition);
}

// ---------------------------------------------------------------------------
// Coulomb gas side

struct ChargeSums {
  long double partition = 0;
  long double voltage_sq = 0;  ///< sum of U_ij^2 e^{-(beta*/4) k^t G k}

  ChargeSums& operator+=(const ChargeSums& o) {
    partition += o.partition;
    voltage_sq += o.voltage_sq;
    return *this;
  }
};

/// Walks neutral charge configurations m with m_0 = -sum_{l != 0} m_l,
/// keeping phi = G m and q = m^t G m up to date incrementally.
class ChargeWalker {
 public:
  ChargeWalker(const GreenTable& g, double beta_star, Vertex i, Vertex j)
      : g_(g),
        coupling_(std::numbers::pi * std::numbers::pi * beta_star),
        i_(i),
        j_(j),
        m_(static_cast<std::size_t>(g.lattice().size()), 0),
        phi_(m_.size(), 0.0) {
    const int n = g.lattice().size();
    shift_table_.resize(static_cast<std::size_t>(n) * n);
    for (Vertex v = 0; v < n; ++v) {
      for (Vertex u = 0; u < n; ++u) shift_table_[v * n + u] = g(u, v) - g(u, 0);
    }
  }

  void set(std::span<const int> vals) {
    long total = 0;
    for (std::size_t v = 1; v < m_.size(); ++v) {
      m_[v] = vals[v];
      total += vals[v];
    }
    m_[0] = static_cast<int>(-total);
    phi_ = potentials(g_, std::span<const int>(m_));
    form_ = 0.0;
    for (std::size_t v = 0; v < m_.size(); ++v) form_ += m_[v] * phi_[v];
  }

  void shift(Vertex v, int delta) {
    // m += delta * (e_v - e_0)
    const int sites = static_cast<int>(m_.size());
    const double* row = &shift_table_[static_cast<std::size_t>(v) * sites];
    // (e_v - e_0)^t G (e_v - e_0) = 2 (g(0) - g(v)) = -2 row[0]
    form_ += 2.0 * delta * (phi_[v] - phi_[0]) - 2.0 * delta * delta * row[0];
    for (Vertex u = 0; u < sites; ++u) phi_[u] += delta * row[u];
    m_[v] += delta;
    m_[0] -= delta;
  }

  void visit() {
    const double w = std::exp(-coupling_ * form_);
    const double u = 2.0 * std::numbers::pi * (phi_[i_] - phi_[j_]);
    sums_.partition += w;
    sums_.voltage_sq += static_cast<long double>(w * u * u);
  }

  ChargeSums sums() const { return sums_; }
  std::span<const int> charges() const { return m_; }
  double form() const { return form_; }

 private:
  const GreenTable& g_;
  double coupling_;  // pi^2 beta*, so that (beta*/4) k^t G k = coupling * m^t G m
  Vertex i_, j_;
  std::vector<int> m_;
  std::vector<double> phi_;
  std::vector<double> shift_table_;  // [v][u] = g(u - v) - g(u)
  double form_ = 0.0;
  ChargeSums sums_;
};

inline ChargeSums charge_sums(const GreenTable& g, double beta_star, Vertex i, Vertex j,
                              int cutoff, const EnumerationBudget& budget = {}) {
  if (!(beta_star > 0)) throw std::invalid_argument("beta* must be > 0");
  g.lattice().check(i);
  g.lattice().check(j);
  return odometer_sum(g.lattice(), cutoff, budget,
                      [&] { return ChargeWalker(g, beta_star, i, j); });
}

/// Truncated Z*_{Lambda, beta*} in its Green's-function form.
inline double cg_partition(int n, double beta_star, const TruncationSpec& trunc,
                           const EnumerationBudget& budget = {}) {
  const GreenTable g = compute_green(n);
  return static_cast<double>(charge_sums(g, beta_star, 0, 0, trunc.charge_cutoff, budget).partition);
}

/// Visit every truncated neutral charge configuration with its value of
/// m^t G m (maintained incrementally). Single-threaded; for tests.
template <class Visitor>
void for_each_charge_config(const GreenTable& g, int cutoff, Visitor&& visit,
                            const EnumerationBudget& budget = {}) {
  struct Adapter {
    ChargeWalker walker;
    Visitor* visitor;
    void set(std::span<const int> v) { walker.set(v); }
    void shift(Vertex v, int d) { walker.shift(v, d); }
    void visit() { (*visitor)(walker.charges(), walker.form()); }
    ChargeSums sums() const { return {}; }
  };
  EnumerationBudget serial = budget;
  serial.workers = 1;
  odometer_sum(g.lattice(), cutoff, serial, [&] { return Adapter{ChargeWalker(g, 1.0, 0, 0), &visit}; });
}

// ---------------------------------------------------------------------------
// Truncation tail estimates

/// Discarded fraction of a product of n one-dimensional lattice Gaussians
/// e^{-a t^2} restricted to |t| <= K. Used with a = smallest eigenvalue of
/// the quadratic form; an estimate, not a bound.
inline double gaussian_tail_estimate(double a, int cutoff, int dims) {
  long double kept = 0, tail = 0;
  for (int t = -cutoff; t <= cutoff; ++t) kept += std::exp(-static_cast<long double>(a) * t * t);
  for (int t = cutoff + 1;; ++t) {
    const long double term = 2.0L * std::exp(-static_cast<long double>(a) * t * t);
    tail += term;
    if (term < 1e-30L * (kept + tail) || t > cutoff + 100000) break;
  }
  const long double frac = tail / (kept + tail);
  return static_cast<double>(-std::expm1(dims * std::log1p(-frac)));
}

inline double height_tail_estimate(const TorusLattice& lat, double beta, int cutoff) {
  const dense::Spectrum s = dense::negative_reduced_spectrum(lat);
  return gaussian_tail_estimate(beta * s.min, cutoff, lat.size() - 1);
}

/// On the free coordinates the Coulomb energy is 4 pi^2 beta* m^t (-Delta_{0^c0^c})^{-1} m.
inline double charge_tail_estimate(const TorusLattice& lat, double beta_star, int cutoff) {
  const dense::Spectrum s = dense::negative_reduced_spectrum(lat);
  const double a = 4.0 * std::numbers::pi * std::numbers::pi * beta_star / s.max;
  return gaussian_tail_estimate(a, cutoff, lat.size() - 1);
}

// ---------------------------------------------------------------------------
// Duality and the cross-model identity

struct DualityReport {
  int side = 0;
  double beta = 0.0;
  double beta_star = 0.0;
  TruncationSpec truncation;
  double lhs = 0.0;          ///< Z_{Lambda, beta}
  double prefactor = 0.0;    ///< (pi/beta)^{(|Lambda|-1)/2} det(-Delta_{0^c0^c})^{-1/2}
  double rhs_partition = 0.0;  ///< Z*_{Lambda, beta*}
  double relative_gap = 0.0;
  double height_tail = 0.0;
  double charge_tail = 0.0;
};

inline DualityReport duality_report(int n, double beta, const TruncationSpec& trunc,
                                    const EnumerationBudget& budget = {}) {
  if (!(beta > 0)) throw std::invalid_argument("beta must be > 0");
  const GreenTable g = compute_green(n);
  const TorusLattice& lat = g.lattice();
  check_budget(lat, trunc.height_cutoff, budget);
  check_budget(lat, trunc.charge_cutoff, budget);

  DualityReport r;
  r.side = n;
  r.beta = beta;
  r.beta_star = 1.0 / (4.0 * beta);
  r.truncation = trunc;
  r.lhs = static_cast<double>(height_sums(lat, beta, 0, 0, trunc.height_cutoff, budget).partition);
  r.rhs_partition =
      static_cast<double>(charge_sums(g, r.beta_star, 0, 0, trunc.charge_cutoff, budget).partition);
  const double dims = lat.size() - 1;
  const double log_pref =
      0.5 * dims * std::log(std::numbers::pi / beta) - 0.5 * dense::log_det_negative_reduced(lat);
  r.prefactor = std::exp(log_pref);
  r.relative_gap = std::abs(r.lhs - r.prefactor * r.rhs_partition) / r.lhs;
  r.height_tail = height_tail_estimate(lat, beta, trunc.height_cutoff);
  r.charge_tail = charge_tail_estimate(lat, r.beta_star, trunc.charge_cutoff);
  return r;
}

struct CrossIdentityReport {
  int side = 0;
  double beta_star = 0.0;
  double beta = 0.0;
  Vertex i = 0;
  Vertex j = 0;
  TruncationSpec truncation;
  double voltage_second_moment = 0.0;  ///< E*[U_ij^2] at beta*
  double height_moment = 0.0;          ///< E_beta[(x_i - x_j)^2], beta = 1/(4 beta*)
  double potential_diff = 0.0;         ///< G_ii - G_ij
  double predicted = 0.0;              ///< (4/beta*) dG - (4/beta*^2) E_beta[O]
  double residual = 0.0;
  double height_tail = 0.0;
  double charge_tail = 0.0;
  /// Tail fractions scaled by the magnitude of the two sides.
  double truncation_error_estimate = 0.0;
};

inline CrossIdentityReport cross_identity(int n, double beta_star, Vertex i, Vertex j,
                                          const TruncationSpec& trunc,
                                          const EnumerationBudget& budget = {}) {
  if (!(beta_star > 0)) throw std::invalid_argument("beta* must be > 0");
  const GreenTable g = compute_green(n);
  const TorusLattice& lat = g.lattice();
  lat.check(i);
  lat.check(j);
  check_budget(lat, trunc.height_cutoff, budget);
  check_budget(lat, trunc.charge_cutoff, budget);

  CrossIdentityReport r;
  r.side = n;
  r.beta_star = beta_star;
  r.beta = 1.0 / (4.0 * beta_star);
  r.i = i;
  r.j = j;
  r.truncation = trunc;
  const HeightSums hs = height_sums(lat, r.beta, i, j, trunc.height_cutoff, budget);
  const ChargeSums cs = charge_sums(g, beta_star, i, j, trunc.charge_cutoff, budget);
  r.height_moment = static_cast<double>(hs.moment / hs.partition);
  r.voltage_second_moment = static_cast<double>(cs.voltage_sq / cs.partition);
  r.potential_diff = potential_diff(g, i, j);
  const double a = 4.0 / beta_star;
  const double b = 4.0 / (beta_star * beta_star);
  r.predicted = a * r.potential_diff - b * r.height_moment;
  r.residual = std::abs(r.voltage_second_moment - r.predicted);
  r.height_tail = height_tail_estimate(lat, r.beta, trunc.height_cutoff);
  r.charge_tail = charge_tail_estimate(lat, beta_star, trunc.charge_cutoff);
  const double scale = a * r.potential_diff + b * r.height_moment;
  r.truncation_error_estimate = scale * (r.height_tail + r.charge_tail);
  return r;
}

inline double cross_identity_residual(int n, double beta_star, Vertex i, Vertex j,
                                      const TruncationSpec& trunc,
                                      const EnumerationBudget& budget = {}) {
  return cross_identity(n, beta_star, i, j, trunc, budget).residual;
}

}  // namespace torus_coulomb::exact
