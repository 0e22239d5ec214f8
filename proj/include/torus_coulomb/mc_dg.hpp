#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "torus_coulomb/height_config.hpp"
#include "torus_coulomb/lattice.hpp"
#include "torus_coulomb/parallel.hpp"
#include "torus_coulomb/stats.hpp"

namespace torus_coulomb::mc {

struct StepRecord {
  Vertex site = 0;
  int delta = 0;
  double energy_change = 0.0;
  bool accepted = false;
};

/// Metropolis rule min(1, e^{-beta dH}).
inline double acceptance_probability(double beta, double energy_change) {
  return energy_change <= 0.0 ? 1.0 : std::exp(-beta * energy_change);
}

/// Single-site +-1 Metropolis chain for the pinned discrete Gaussian model.
/// The origin is never proposed.
class DGChain {
 public:
  DGChain(int side, double beta, std::uint64_t seed)
      : lat_(side), beta_(beta), state_(lat_), rng_(seed), site_(1, lat_.size() - 1) {
    if (!(beta > 0)) throw std::invalid_argument("DGChain: beta must be > 0");
  }

  /// Apply the Metropolis rule to a given proposal and uniform variate.
  StepRecord propose(Vertex v, int delta, double uniform) {
    const long dh = local_energy_change(lat_, state_.values(), v, delta);
    StepRecord r{v, delta, static_cast<double>(dh), false};
    ++proposals_;
    if (uniform < acceptance_probability(beta_, static_cast<double>(dh))) {
      state_.add(v, delta);
      energy_ += dh;
      r.accepted = true;
      ++accepted_;
    }
    return r;
  }

  StepRecord step() {
    const Vertex v = site_(rng_);
    const int delta = (rng_() & 1U) ? 1 : -1;
    return propose(v, delta, unit_(rng_));
  }

  /// N^2 - 1 proposals. Every 1000 sweeps the cached energy is checked.
  void sweep() {
    for (int k = 1; k < lat_.size(); ++k) step();
    if (++sweeps_ % 1000 == 0 && energy_ != hamiltonian(lat_, state_)) {
      throw std::logic_error("DGChain: cached energy drifted from H(x)");
    }
  }

  const TorusLattice& lattice() const { return lat_; }
  const HeightConfig& state() const { return state_; }
  long energy() const { return energy_; }
  double beta() const { return beta_; }
  std::uint64_t sweeps() const { return sweeps_; }
  double acceptance_rate() const {
    return proposals_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(proposals_);
  }

 private:
  TorusLattice lat_;
  double beta_;
  HeightConfig state_;
  long energy_ = 0;
  std::mt19937_64 rng_;
  std::uniform_int_distribution<Vertex> site_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  std::uint64_t sweeps_ = 0;
  std::uint64_t proposals_ = 0;
  std::uint64_t accepted_ = 0;
};

struct EstimateReport {
  std::string observable;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t sweeps = 0;
  std::uint64_t burn_in = 0;
  std::uint64_t seed = 0;
  int batches = 0;
};

/// 10% of the measurement sweeps, at least 1000.
inline std::uint64_t default_burn_in(std::uint64_t sweeps) {
  return std::max<std::uint64_t>(sweeps / 10, 1000);
}

struct DGRunConfig {
  int side = 8;
  double beta = 3.0;
  Vertex i = 0;
  Vertex j = 1;
  std::uint64_t sweeps = 100000;  ///< measurement sweeps per chain
  std::optional<std::uint64_t> burn_in;
  std::uint64_t seed = 1;
  int batches = 32;
  int k_max = 5;
  int chains = 1;   ///< chain c uses seed + c
  int workers = 1;
};

struct DGEstimate {
  DGRunConfig config;
  std::uint64_t burn_in = 0;
  double acceptance_rate = 0.0;
  std::vector<EstimateReport> observables;

  const EstimateReport& at(const std::string& name) const {
    for (const auto& o : observables) {
      if (o.observable == name) return o;
    }
    throw std::out_of_range("no observable named " + name);
  }
};

inline std::string tail_name(int k) { return "P(|x_i-x_j|>=" + std::to_string(k) + ")"; }

/// Batch-means estimates of E[(x_i - x_j)^2], E[x_i - x_j] and
/// P(|x_i - x_j| >= k) for k = 1..k_max, measured once per sweep.
inline DGEstimate dg_estimate(const DGRunConfig& cfg) {
  const TorusLattice lat(cfg.side);
  lat.check(cfg.i);
  lat.check(cfg.j);
  if (!(cfg.beta > 0)) throw std::invalid_argument("dg_estimate: beta must be > 0");
  if (cfg.chains < 1) throw std::invalid_argument("dg_estimate: chains must be >= 1");
  if (cfg.k_max < 1) throw std::invalid_argument("dg_estimate: k_max must be >= 1");
  const std::uint64_t burn = cfg.burn_in.value_or(default_burn_in(cfg.sweeps));
  const int n_obs = 2 + cfg.k_max;

  struct ChainResult {
    std::vector<std::vector<double>> means;  // [observable][batch]
    double acceptance = 0.0;
  };
  std::vector<ChainResult> results(static_cast<std::size_t>(cfg.chains));
  // Validate batch layout before spawning workers.
  BatchMeans probe(cfg.sweeps, cfg.batches);
  (void)probe;

  parallel_tasks(cfg.chains, cfg.workers, [&](int c) {
    DGChain chain(cfg.side, cfg.beta, cfg.seed + static_cast<std::uint64_t>(c));
    for (std::uint64_t s = 0; s < burn; ++s) chain.sweep();
    std::vector<BatchMeans> acc(static_cast<std::size_t>(n_obs), BatchMeans(cfg.sweeps, cfg.batches));
    for (std::uint64_t s = 0; s < cfg.sweeps; ++s) {
      chain.sweep();
      const int d = chain.state()[cfg.i] - chain.state()[cfg.j];
      acc[0].push(static_cast<double>(d) * d);
      acc[1].push(static_cast<double>(d));
      for (int k = 1; k <= cfg.k_max; ++k) acc[1 + k].push(std::abs(d) >= k ? 1.0 : 0.0);
    }
    ChainResult& r = results[static_cast<std::size_t>(c)];
    for (const auto& a : acc) r.means.emplace_back(a.means().begin(), a.means().end());
    r.acceptance = chain.acceptance_rate();
  });

  DGEstimate out;
  out.config = cfg;
  out.burn_in = burn;
  std::vector<std::string> names{"O_ij", "x_i-x_j"};
  for (int k = 1; k <= cfg.k_max; ++k) names.push_back(tail_name(k));
  for (int o = 0; o < n_obs; ++o) {
    std::vector<double> pooled;
    for (const auto& r : results) pooled.insert(pooled.end(), r.means[o].begin(), r.means[o].end());
    const MeanWithError s = batch_statistics(pooled);
    out.observables.push_back({names[o], s.mean, s.std_error, cfg.sweeps, burn, cfg.seed,
                               static_cast<int>(pooled.size())});
  }
  for (const auto& r : results) out.acceptance_rate += r.acceptance / cfg.chains;
  return out;
}

}  // namespace torus_coulomb::mc
