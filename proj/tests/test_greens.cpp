#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <random>

#include "torus_coulomb/dense.hpp"
#include "torus_coulomb/greens.hpp"

using namespace torus_coulomb;

namespace {

// Oracle: solve (-1/4 Delta + J/N^2) G = I - J/N^2 densely. The rank-one
// term fixes the zero mode, so the solution is the zero-mean solution of
// -1/4 Delta G = I - J/N^2.
Eigen::MatrixXd dense_green(const TorusLattice& lat) {
  const int n = lat.size();
  const Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, 1.0 / n);
  const Eigen::MatrixXd a = -0.25 * dense::laplacian(lat) + j;
  const Eigen::MatrixXd rhs = Eigen::MatrixXd::Identity(n, n) - j;
  return a.fullPivLu().solve(rhs);
}

std::vector<int> random_neutral(const TorusLattice& lat, std::mt19937& rng, int range) {
  std::uniform_int_distribution<int> d(-range, range);
  std::vector<int> k(static_cast<std::size_t>(lat.size()));
  int sum = 0;
  for (std::size_t v = 1; v < k.size(); ++v) {
    k[v] = d(rng);
    sum += k[v];
  }
  k[0] = -sum;
  return k;
}

}  // namespace

TEST(Green, RejectsTinySides) { EXPECT_THROW(compute_green(1), std::invalid_argument); }

TEST(Green, ZeroMeanSymmetricMaximalAtOrigin) {
  for (int n = 2; n <= 24; ++n) {
    const GreenTable g = compute_green(n);
    double sum = 0.0;
    for (double v : g.values()) sum += v;
    EXPECT_NEAR(sum, 0.0, 1e-12) << "N=" << n;
    for (int dy = 0; dy < n; ++dy) {
      for (int dx = 0; dx < n; ++dx) {
        EXPECT_NEAR(g.at({dx, dy}), g.at({-dx, -dy}), 1e-13);
        EXPECT_GE(g.at({0, 0}) + 1e-13, g.at({dx, dy}));
      }
    }
  }
}

TEST(Green, SumDeltaGIdentity) {
  for (int n = 2; n <= 32; ++n) {
    const GreenTable g = compute_green(n);
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
    EXPECT_LE(worst, 1e-10) << "N=" << n;
  }
}

TEST(Green, MatchesDenseSolveOracle) {
  for (int n : {2, 3, 4, 5, 8}) {
    const GreenTable g = compute_green(n);
    const Eigen::MatrixXd oracle = dense_green(g.lattice());
    for (Vertex i = 0; i < g.lattice().size(); ++i) {
      for (Vertex j = 0; j < g.lattice().size(); ++j) {
        ASSERT_NEAR(g(i, j), oracle(i, j), 1e-11) << "N=" << n;
      }
    }
  }
  const GreenTable g4 = compute_green(4);
  const Eigen::MatrixXd o4 = dense_green(g4.lattice());
  EXPECT_NEAR(g4.at({0, 0}) - g4.at({1, 0}), o4(0, 0) - o4(0, g4.lattice().index({1, 0})), 1e-12);
}

TEST(PotentialDiff, BasicProperties) {
  const GreenTable g = compute_green(4);
  const TorusLattice& lat = g.lattice();
  EXPECT_EQ(potential_diff(g, 5, 5), 0.0);
  const Eigen::MatrixXd oracle = dense_green(lat);
  const Vertex far = lat.index({2, 2});
  EXPECT_NEAR(potential_diff(g, 0, far), oracle(0, 0) - oracle(0, far), 1e-12);
  for (Vertex i = 0; i < lat.size(); ++i) {
    for (Vertex j = 0; j < lat.size(); ++j) {
      const double d = potential_diff(g, i, j);
      EXPECT_NEAR(d, potential_diff(g, j, i), 1e-13);
      if (i != j) { EXPECT_GT(d, 0.0); }
      const Vec2 ci = lat.coord(i), cj = lat.coord(j);
      const Vertex ti = lat.index({ci.x + 1, ci.y + 3});
      const Vertex tj = lat.index({cj.x + 1, cj.y + 3});
      EXPECT_NEAR(d, potential_diff(g, ti, tj), 1e-13);
    }
  }
}

TEST(PotentialDiff, GrowsWithDistanceAlongAxis) {
  const GreenTable g = compute_green(32);
  double prev = 0.0;
  for (int d = 1; d <= 16; ++d) {
    const double v = potential_diff(g, 0, g.lattice().index({d, 0}));
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(ReducedInverse, ReconstructsInverse) {
  for (int n = 2; n <= 12; ++n) {
    const GreenTable g = compute_green(n);
    const TorusLattice& lat = g.lattice();
    const int m = lat.size() - 1;
    Eigen::MatrixXd inv(m, m);
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) inv(a, b) = reduced_inverse_entry(g, a + 1, b + 1);
    }
    const Eigen::MatrixXd prod = inv * dense::reduced_laplacian(lat);
    const double err = (prod - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
    EXPECT_LE(err, 1e-8) << "N=" << n;
  }
}

TEST(ReducedInverse, MatchesDenseInversion) {
  const GreenTable g = compute_green(4);
  const TorusLattice& lat = g.lattice();
  const Eigen::MatrixXd oracle = dense::reduced_laplacian(lat).inverse();
  const Vertex a = lat.index({1, 0});
  EXPECT_NEAR(reduced_inverse_entry(g, a, a), oracle(a - 1, a - 1), 1e-12);
  for (Vertex i = 1; i < lat.size(); ++i) {
    for (Vertex j = 1; j < lat.size(); ++j) {
      EXPECT_NEAR(reduced_inverse_entry(g, i, j), oracle(i - 1, j - 1), 1e-12);
      EXPECT_NEAR(reduced_inverse_entry(g, i, j), reduced_inverse_entry(g, j, i), 1e-14);
    }
  }
}

TEST(ReducedInverse, OriginRejected) {
  const GreenTable g = compute_green(4);
  EXPECT_THROW(reduced_inverse_entry(g, 0, 3), std::invalid_argument);
  EXPECT_THROW(reduced_inverse_entry(g, 3, 0), std::invalid_argument);
}

TEST(QuadraticForm, ZeroAndDipole) {
  const GreenTable g = compute_green(5);
  const TorusLattice& lat = g.lattice();
  std::vector<int> k(static_cast<std::size_t>(lat.size()), 0);
  EXPECT_EQ(quadratic_form(g, k), 0.0);
  const Vertex i = lat.index({1, 2}), j = lat.index({4, 0});
  k[i] = 1;
  k[j] = -1;
  EXPECT_NEAR(quadratic_form(g, k), 2.0 * potential_diff(g, i, j), 1e-13);
  EXPECT_THROW(quadratic_form(g, std::vector<int>(3, 0)), std::invalid_argument);
}

TEST(QuadraticForm, GreenFormEqualsReducedInverseForm) {
  std::mt19937 rng(2024);
  for (int n = 3; n <= 12; ++n) {
    const GreenTable g = compute_green(n);
    const TorusLattice& lat = g.lattice();
    const Eigen::LDLT<Eigen::MatrixXd> solver(dense::reduced_laplacian(lat));
    for (int trial = 0; trial < 100; ++trial) {
      const auto k = random_neutral(lat, rng, 2);
      Eigen::VectorXd kc(lat.size() - 1);
      for (int a = 0; a < kc.size(); ++a) kc(a) = k[a + 1];
      const double rhs = -4.0 * kc.dot(solver.solve(kc));
      const double lhs = quadratic_form(g, k);
      if (std::abs(rhs) < 1e-12 && std::abs(lhs) < 1e-12) continue;
      EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::abs(rhs)) << "N=" << n;
    }
  }
}

TEST(QuadraticForm, PositiveOnNonzeroNeutralVectors) {
  std::mt19937 rng(99);
  for (int n = 2; n <= 10; ++n) {
    const GreenTable g = compute_green(n);
    for (int trial = 0; trial < 200; ++trial) {
      auto k = random_neutral(g.lattice(), rng, 1);
      const bool zero = std::all_of(k.begin(), k.end(), [](int v) { return v == 0; });
      const double q = quadratic_form(g, k);
      if (zero) {
        EXPECT_EQ(q, 0.0);
      } else {
        // smallest eigenvalue of G on the neutral hyperplane is 1/2
        const double norm2 = std::inner_product(k.begin(), k.end(), k.begin(), 0.0);
        EXPECT_GE(q, 0.5 * norm2 - 1e-10);
      }
    }
  }
}
