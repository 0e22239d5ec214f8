#pragma once

#include <Eigen/Dense>

#include "torus_coulomb/lattice.hpp"

namespace torus_coulomb::dense {

/// Full Laplacian as a dense matrix (multi-edges accumulate).
inline Eigen::MatrixXd laplacian(const TorusLattice& lat) {
  const int n = lat.size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Vertex k = 0; k < n; ++k) {
    for (const auto& [v, w] : lat.laplacian_row(k)) m(k, v) = w;
  }
  return m;
}

/// Laplacian restricted to Lambda \ {0}. Row/column r corresponds to vertex r + 1.
inline Eigen::MatrixXd reduced_laplacian(const TorusLattice& lat) {
  const int n = lat.size();
  return laplacian(lat).bottomRightCorner(n - 1, n - 1);
}

/// log det(-Delta_{0^c 0^c}) via Cholesky; the matrix is positive definite.
inline double log_det_negative_reduced(const TorusLattice& lat) {
  const Eigen::MatrixXd a = -reduced_laplacian(lat);
  const Eigen::LLT<Eigen::MatrixXd> llt(a);
  const Eigen::MatrixXd l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

/// Extreme eigenvalues of -Delta_{0^c 0^c}.
struct Spectrum {
  double min = 0.0;
  double max = 0.0;
};

inline Spectrum negative_reduced_spectrum(const TorusLattice& lat) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(-reduced_laplacian(lat),
                                                         Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

}  // namespace torus_coulomb::dense
