#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torus_coulomb/contours.hpp"
#include "torus_coulomb/greens.hpp"
#include "torus_coulomb/mc_dg.hpp"
#include "torus_coulomb/parallel.hpp"
#include "torus_coulomb/stats.hpp"

namespace torus_coulomb::mc {

/// Neutral integer charges m (physical charge k = 2 pi m) with cached
/// potentials phi_v = sum_l g(l - v) m_l and quadratic form m^t G m.
class ChargeConfig {
 public:
  explicit ChargeConfig(const GreenTable& g)
      : charges_(static_cast<std::size_t>(g.lattice().size()), 0), phi_(charges_.size(), 0.0) {}

  ChargeConfig(const GreenTable& g, std::vector<int> charges) : charges_(std::move(charges)) {
    if (static_cast<int>(charges_.size()) != g.lattice().size()) {
      throw std::invalid_argument("ChargeConfig: expected one charge per vertex");
    }
    long total = 0;
    for (int m : charges_) total += m;
    if (total != 0) throw std::invalid_argument("ChargeConfig: charges must sum to zero");
    refresh(g);
  }

  /// Recompute potentials and the quadratic form from scratch.
  void refresh(const GreenTable& g) {
    phi_ = potentials(g, std::span<const int>(charges_));
    form_ = 0.0;
    for (std::size_t v = 0; v < charges_.size(); ++v) form_ += charges_[v] * phi_[v];
  }

  /// m^t G m change for m_a += 1, m_b -= 1.
  double dipole_form_change(const GreenTable& g, Vertex a, Vertex b) const {
    return 2.0 * (phi_[a] - phi_[b]) + 2.0 * (g(0, 0) - g(a, b));
  }

  void apply_dipole(const GreenTable& g, Vertex a, Vertex b, double form_change) {
    ++charges_[a];
    --charges_[b];
    const int n = static_cast<int>(charges_.size());
    for (Vertex v = 0; v < n; ++v) phi_[v] += g(v, a) - g(v, b);
    form_ += form_change;
  }

  std::span<const int> charges() const { return charges_; }
  std::span<const double> potentials_cache() const { return phi_; }
  double form() const { return form_; }
  /// (beta*/4) k^t G k = pi^2 beta* m^t G m.
  double energy(double beta_star) const {
    return std::numbers::pi * std::numbers::pi * beta_star * form_;
  }

  long total_charge() const {
    long t = 0;
    for (int m : charges_) t += m;
    return t;
  }

 private:
  std::vector<int> charges_;
  std::vector<double> phi_;
  double form_ = 0.0;
};

/// U_ij = sum_l (G_il - G_jl) k_l = 2 pi (phi_i - phi_j).
inline double voltage(const ChargeConfig& cfg, Vertex i, Vertex j) {
  const auto phi = cfg.potentials_cache();
  return 2.0 * std::numbers::pi * (phi[i] - phi[j]);
}

enum class DipoleProposal { nearest_neighbor, uniform_pair };

inline const char* to_string(DipoleProposal p) {
  return p == DipoleProposal::nearest_neighbor ? "nn" : "uniform";
}

/// Metropolis chain over neutral charge configurations using dipole moves
/// m_a += 1, m_b -= 1. Starts from m = 0.
class CGChain {
 public:
  static constexpr std::uint64_t kRefreshInterval = 1000;

  CGChain(GreenTable g, double beta_star, std::uint64_t seed,
          DipoleProposal proposal = DipoleProposal::nearest_neighbor)
      : g_(std::move(g)),
        beta_star_(beta_star),
        proposal_(proposal),
        cfg_(g_),
        rng_(seed),
        site_(0, g_.lattice().size() - 1),
        other_(0, g_.lattice().size() - 2) {
    if (!(beta_star > 0)) throw std::invalid_argument("CGChain: beta* must be > 0");
  }

  /// Metropolis rule for a given dipole (a, b) and uniform variate.
  StepRecord propose(Vertex a, Vertex b, double uniform) {
    const double dq = cfg_.dipole_form_change(g_, a, b);
    const double de = std::numbers::pi * std::numbers::pi * beta_star_ * dq;
    StepRecord r{a, +1, de, false};
    ++proposals_;
    if (uniform < acceptance_probability(1.0, de)) {
      cfg_.apply_dipole(g_, a, b, dq);
      r.accepted = true;
      ++accepted_;
      if (accepted_ % kRefreshInterval == 0) cfg_.refresh(g_);
    }
    return r;
  }

  StepRecord step() {
    const Vertex a = site_(rng_);
    Vertex b;
    if (proposal_ == DipoleProposal::nearest_neighbor) {
      b = g_.lattice().neighbors(a)[rng_() & 3U];
    } else {
      b = other_(rng_);
      if (b >= a) ++b;
    }
    return propose(a, b, unit_(rng_));
  }

  /// N^2 proposals.
  void sweep() {
    for (int k = 0; k < g_.lattice().size(); ++k) step();
    ++sweeps_;
  }

  const GreenTable& green() const { return g_; }
  const ChargeConfig& state() const { return cfg_; }
  double beta_star() const { return beta_star_; }
  std::uint64_t sweeps() const { return sweeps_; }
  std::uint64_t accepted() const { return accepted_; }
  double acceptance_rate() const {
    return proposals_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposals_);
  }

 private:
  GreenTable g_;
  double beta_star_;
  DipoleProposal proposal_;
  ChargeConfig cfg_;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<Vertex> site_;
  std::uniform_int_distribution<Vertex> other_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::uint64_t sweeps_ = 0;
  std::uint64_t proposals_ = 0;
  std::uint64_t accepted_ = 0;
};

/// Largest beta* for which the variance sandwich is guaranteed.
inline constexpr double kMaxSandwichBetaStar = 1.0 / 12.0;

struct CGRunConfig {
  int side = 8;
  double beta_star = kMaxSandwichBetaStar;
  Vertex i = 0;
  Vertex j = 1;
  std::uint64_t sweeps = 100000;
  std::optional<std::uint64_t> burn_in;
  std::uint64_t seed = 1;
  int batches = 32;
  int chains = 1;
  int workers = 1;
  DipoleProposal proposal = DipoleProposal::nearest_neighbor;
};

struct VarianceReport {
  CGRunConfig config;
  std::uint64_t burn_in = 0;
  double second_moment = 0.0;  ///< E*[U_ij^2]
  double second_moment_error = 0.0;
  double mean_voltage = 0.0;   ///< E*[U_ij], zero in expectation
  double mean_voltage_error = 0.0;
  double third_moment = 0.0;   ///< E*[U_ij^3], zero in expectation
  double third_moment_error = 0.0;
  double potential_diff = 0.0; ///< G_ii - G_ij
  bool bounds_apply = false;   ///< N >= 4 and beta* <= 1/12
  std::optional<double> lower_bound;
  std::optional<double> upper_bound;
  std::string warning;
  double acceptance_rate = 0.0;
};

/// (4/beta*) dG and (4/beta*) dG - (4/beta*^2) M_{1/(4 beta*)}.
struct VarianceBounds {
  double lower = 0.0;
  double upper = 0.0;
};

inline VarianceBounds variance_bounds(double potential_diff, double beta_star) {
  const double upper = 4.0 / beta_star * potential_diff;
  const double m = contours::m_beta(1.0 / (4.0 * beta_star));
  return {upper - 4.0 / (beta_star * beta_star) * m, upper};
}

inline VarianceReport cg_variance(const CGRunConfig& cfg) {
  const GreenTable g = compute_green(cfg.side);
  const TorusLattice& lat = g.lattice();
  lat.check(cfg.i);
  lat.check(cfg.j);
  if (!(cfg.beta_star > 0)) throw std::invalid_argument("cg_variance: beta* must be > 0");
  if (cfg.chains < 1) throw std::invalid_argument("cg_variance: chains must be >= 1");
  const std::uint64_t burn = cfg.burn_in.value_or(default_burn_in(cfg.sweeps));
  BatchMeans probe(cfg.sweeps, cfg.batches);
  (void)probe;

  struct ChainResult {
    std::vector<std::vector<double>> means;
    double acceptance = 0.0;
  };
  std::vector<ChainResult> results(static_cast<std::size_t>(cfg.chains));
  parallel_tasks(cfg.chains, cfg.workers, [&](int c) {
    CGChain chain(g, cfg.beta_star, cfg.seed + static_cast<std::uint64_t>(c), cfg.proposal);
    for (std::uint64_t s = 0; s < burn; ++s) chain.sweep();
    std::vector<BatchMeans> acc(3, BatchMeans(cfg.sweeps, cfg.batches));
    for (std::uint64_t s = 0; s < cfg.sweeps; ++s) {
      chain.sweep();
      const double u = voltage(chain.state(), cfg.i, cfg.j);
      acc[0].push(u * u);
      acc[1].push(u);
      acc[2].push(u * u * u);
    }
    ChainResult& r = results[static_cast<std::size_t>(c)];
    for (const auto& a : acc) r.means.emplace_back(a.means().begin(), a.means().end());
    r.acceptance = chain.acceptance_rate();
  });

  auto pooled = [&](int o) {
    std::vector<double> all;
    for (const auto& r : results) all.insert(all.end(), r.means[o].begin(), r.means[o].end());
    return batch_statistics(all);
  };
  VarianceReport out;
  out.config = cfg;
  out.burn_in = burn;
  const MeanWithError m2 = pooled(0), m1 = pooled(1), m3 = pooled(2);
  out.second_moment = m2.mean;
  out.second_moment_error = m2.std_error;
  out.mean_voltage = m1.mean;
  out.mean_voltage_error = m1.std_error;
  out.third_moment = m3.mean;
  out.third_moment_error = m3.std_error;
  out.potential_diff = potential_diff(g, cfg.i, cfg.j);
  for (const auto& r : results) out.acceptance_rate += r.acceptance / cfg.chains;

  out.bounds_apply = cfg.side >= 4 && cfg.beta_star <= kMaxSandwichBetaStar;
  if (out.bounds_apply) {
    const VarianceBounds b = variance_bounds(out.potential_diff, cfg.beta_star);
    out.lower_bound = b.lower;
    out.upper_bound = b.upper;
  } else if (cfg.beta_star > kMaxSandwichBetaStar) {
    out.warning = "beta* > 1/12: variance bounds do not apply";
  } else {
    out.warning = "N < 4: variance bounds do not apply";
  }
  return out;
}

}  // namespace torus_coulomb::mc
