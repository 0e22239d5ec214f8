#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torus_coulomb/lattice.hpp"

namespace torus_coulomb {

/// Translation-invariant Green's function of simple random walk on the
/// torus, mean-subtracted and Abel-regularised: G_ij = g(j - i).
///
/// Computed from the closed spectral form
///
///   g(d) = N^-2 * sum_{p != 0} cos(2 pi p.d / N) / (1 - lambda_p),
///   lambda_p = (cos(2 pi p1 / N) + cos(2 pi p2 / N)) / 2,
///
/// which satisfies -1/4 * Laplacian * G = I - J / N^2. The mode
/// lambda_p = -1 (even N) contributes 1/2, the Abel limit of sum (-1)^t.
class GreenTable {
 public:
  explicit GreenTable(int side) : lat_(side), g_(static_cast<std::size_t>(side) * side, 0.0) {
    const int n = side;
    const double two_pi_n = 2.0 * std::numbers::pi / n;
    std::vector<double> cosines(static_cast<std::size_t>(n) * n);
    for (int p = 0; p < n; ++p) {
      for (int d = 0; d < n; ++d) cosines[p * n + d] = std::cos(two_pi_n * ((p * d) % n));
    }
    std::vector<double> weight(static_cast<std::size_t>(n) * n, 0.0);
    for (int p2 = 0; p2 < n; ++p2) {
      for (int p1 = 0; p1 < n; ++p1) {
        if (p1 == 0 && p2 == 0) continue;
        const double lambda = 0.5 * (cosines[p1 * n + 1] + cosines[p2 * n + 1]);
        weight[p2 * n + p1] = 1.0 / (1.0 - lambda);
      }
    }
    // Separable transform: the sine part cancels under p -> -p.
    std::vector<double> partial(static_cast<std::size_t>(n) * n, 0.0);  // [p2][dx]
    for (int p2 = 0; p2 < n; ++p2) {
      for (int dx = 0; dx < n; ++dx) {
        double s = 0.0;
        for (int p1 = 0; p1 < n; ++p1) s += weight[p2 * n + p1] * cosines[p1 * n + dx];
        partial[p2 * n + dx] = s;
      }
    }
    const double norm = 1.0 / (static_cast<double>(n) * n);
    for (int dy = 0; dy < n; ++dy) {
      for (int dx = 0; dx < n; ++dx) {
        double s = 0.0;
        for (int p2 = 0; p2 < n; ++p2) s += partial[p2 * n + dx] * cosines[p2 * n + dy];
        g_[dy * n + dx] = s * norm;
      }
    }
  }

  int side() const { return lat_.side(); }
  const TorusLattice& lattice() const { return lat_; }

  /// g(d) for a displacement, reduced mod N.
  double at(Vec2 d) const { return g_[static_cast<std::size_t>(lat_.index(d))]; }

  /// G_ij.
  double operator()(Vertex i, Vertex j) const {
    return g_[static_cast<std::size_t>(lat_.index(lat_.displacement(i, j)))];
  }

  /// g indexed by displacement vertex (row-major dy * N + dx).
  std::span<const double> values() const { return g_; }

 private:
  TorusLattice lat_;
  std::vector<double> g_;
};

inline GreenTable compute_green(int side) {
  if (side < 2) {
    throw std::invalid_argument("compute_green: N must be >= 2, got " + std::to_string(side));
  }
  return GreenTable(side);
}

/// G_ii - G_ij: the potential kernel between i and j.
inline double potential_diff(const GreenTable& g, Vertex i, Vertex j) {
  g.lattice().check(i);
  g.lattice().check(j);
  if (i == j) return 0.0;
  return g.at({0, 0}) - g(i, j);
}

/// Entry (i, j) of the inverse of the Laplacian restricted to the non-origin
/// vertices: -1/4 * (G_ij - G_i0 - G_0j + G_00).
inline double reduced_inverse_entry(const GreenTable& g, Vertex i, Vertex j) {
  g.lattice().check(i);
  g.lattice().check(j);
  if (i == 0 || j == 0) {
    throw std::invalid_argument("reduced_inverse_entry: the origin is excluded");
  }
  return -0.25 * (g(i, j) - g(i, 0) - g(0, j) + g(0, 0));
}

/// k^t G k. Dense O(|Lambda|^2) double sum.
template <class T>
double quadratic_form(const GreenTable& g, std::span<const T> k) {
  const TorusLattice& lat = g.lattice();
  if (static_cast<int>(k.size()) != lat.size()) {
    throw std::invalid_argument("quadratic_form: vector length must equal N^2");
  }
  double total = 0.0;
  for (Vertex i = 0; i < lat.size(); ++i) {
    if (k[i] == T{}) continue;
    double row = 0.0;
    for (Vertex j = 0; j < lat.size(); ++j) {
      if (k[j] == T{}) continue;
      row += g(i, j) * static_cast<double>(k[j]);
    }
    total += static_cast<double>(k[i]) * row;
  }
  return total;
}

template <class T>
double quadratic_form(const GreenTable& g, const std::vector<T>& k) {
  return quadratic_form(g, std::span<const T>(k));
}

/// phi_v = sum_l G_vl k_l for every vertex v.
template <class T>
std::vector<double> potentials(const GreenTable& g, std::span<const T> k) {
  const TorusLattice& lat = g.lattice();
  std::vector<double> phi(static_cast<std::size_t>(lat.size()), 0.0);
  for (Vertex l = 0; l < lat.size(); ++l) {
    if (k[l] == T{}) continue;
    for (Vertex v = 0; v < lat.size(); ++v) phi[v] += g(v, l) * static_cast<double>(k[l]);
  }
  return phi;
}

}  // namespace torus_coulomb
