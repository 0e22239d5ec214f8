#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "torus_coulomb/lattice.hpp"

using namespace torus_coulomb;

namespace {

std::vector<Vec2> neighbor_coords(const TorusLattice& lat, Vec2 v) {
  std::vector<Vec2> out;
  for (Vertex u : lat.neighbors(lat.index(v))) out.push_back(lat.coord(u));
  return out;
}

}  // namespace

TEST(Lattice, RejectsTinySides) {
  EXPECT_THROW(TorusLattice(1), std::invalid_argument);
  EXPECT_THROW(TorusLattice(0), std::invalid_argument);
  EXPECT_NO_THROW(TorusLattice(2));
}

TEST(Lattice, NeighborsWrapAtOrigin) {
  const TorusLattice lat(4);
  const std::vector<Vec2> expected{{1, 0}, {0, 1}, {3, 0}, {0, 3}};
  EXPECT_EQ(neighbor_coords(lat, {0, 0}), expected);
  EXPECT_EQ(lat.coord(0), (Vec2{0, 0}));
}

TEST(Lattice, NeighborsWrapOnBothAxes) {
  const TorusLattice lat(4);
  const std::vector<Vec2> expected{{0, 3}, {3, 0}, {2, 3}, {3, 2}};
  EXPECT_EQ(neighbor_coords(lat, {3, 3}), expected);
}

TEST(Lattice, SideTwoHasDoubledNeighbors) {
  const TorusLattice lat(2);
  // displacements +-e1, +-e2 mod 2
  std::multiset<Vertex> got;
  for (Vertex u : lat.neighbors(0)) got.insert(u);
  const Vertex east = lat.index({1, 0});
  const Vertex north = lat.index({0, 1});
  EXPECT_EQ(got.count(east), 2u);
  EXPECT_EQ(got.count(north), 2u);
  EXPECT_EQ(got.size(), 4u);
}

TEST(Lattice, InvalidVertexThrows) {
  const TorusLattice lat(4);
  EXPECT_THROW(lat.neighbors(16), std::out_of_range);
  EXPECT_THROW(lat.neighbors(-1), std::out_of_range);
  EXPECT_THROW(lat.laplacian_row(99), std::out_of_range);
}

TEST(Lattice, DistinctNeighborsAndEdgeCount) {
  for (int n = 3; n <= 12; ++n) {
    const TorusLattice lat(n);
    std::set<std::pair<Vertex, Vertex>> edges;
    for (Vertex v = 0; v < lat.size(); ++v) {
      const auto nb = lat.neighbors(v);
      EXPECT_EQ(std::set<Vertex>(nb.begin(), nb.end()).size(), 4u);
      for (Vertex u : nb) edges.insert({std::min(u, v), std::max(u, v)});
    }
    EXPECT_EQ(static_cast<int>(edges.size()), 2 * n * n);
    EXPECT_EQ(lat.edge_count(), 2 * n * n);
  }
}

TEST(Laplacian, RowAtOrigin) {
  const TorusLattice lat(4);
  const auto row = lat.laplacian_row(0);
  const std::map<Vertex, int> expected{{0, -4},
                                       {lat.index({1, 0}), 1},
                                       {lat.index({0, 1}), 1},
                                       {lat.index({3, 0}), 1},
                                       {lat.index({0, 3}), 1}};
  EXPECT_EQ(row, expected);
}

TEST(Laplacian, InteriorRowSideThree) {
  const TorusLattice lat(3);
  const auto row = lat.laplacian_row(lat.index({1, 1}));
  EXPECT_EQ(row.size(), 5u);
  EXPECT_EQ(row.at(lat.index({1, 1})), -4);
  for (const auto& [v, w] : row) {
    if (v != lat.index({1, 1})) { EXPECT_EQ(w, 1); }
  }
}

TEST(Laplacian, SideTwoAccumulatesMultiEdges) {
  const TorusLattice lat(2);
  const auto row = lat.laplacian_row(0);
  EXPECT_EQ(row.at(0), -4);
  EXPECT_EQ(row.at(lat.index({1, 0})), 2);
  EXPECT_EQ(row.at(lat.index({0, 1})), 2);
}

TEST(Laplacian, RowSumsAndDiagonal) {
  for (int n = 2; n <= 16; ++n) {
    const TorusLattice lat(n);
    for (Vertex k = 0; k < lat.size(); ++k) {
      const auto row = lat.laplacian_row(k);
      int sum = 0;
      for (const auto& [v, w] : row) sum += w;
      EXPECT_EQ(sum, 0) << "N=" << n << " k=" << k;
      EXPECT_EQ(row.at(k), -4);
    }
  }
}

TEST(Laplacian, Symmetric) {
  for (int n = 2; n <= 8; ++n) {
    const TorusLattice lat(n);
    for (Vertex k = 0; k < lat.size(); ++k) {
      const auto rk = lat.laplacian_row(k);
      for (Vertex j = 0; j < lat.size(); ++j) {
        const auto rj = lat.laplacian_row(j);
        const int a = rk.contains(j) ? rk.at(j) : 0;
        const int b = rj.contains(k) ? rj.at(k) : 0;
        ASSERT_EQ(a, b) << "N=" << n << " (" << k << "," << j << ")";
      }
    }
  }
}

TEST(DualEdge, LargerValueOnTheLeft) {
  const TorusLattice lat(4);
  const Vertex l = lat.index({0, 0});
  const Vertex m = lat.index({1, 0});
  const auto e = lat.dual_edge_of(l, m, 1, 0);
  ASSERT_TRUE(e.has_value());
  // from (1/2, -1/2) to (1/2, 1/2)
  EXPECT_EQ(e->tail, (DualVertex{0, 3}));
  EXPECT_EQ(e->head, (DualVertex{0, 0}));
  EXPECT_EQ(e->direction, (Vec2{0, 1}));
  EXPECT_EQ(lat.left_vertex(*e), l);
  EXPECT_EQ(lat.right_vertex(*e), m);
}

TEST(DualEdge, SwappingHeightsReverses) {
  const TorusLattice lat(5);
  const Vertex l = lat.index({0, 0});
  const Vertex m = lat.index({1, 0});
  const auto a = lat.dual_edge_of(l, m, 1, 0);
  const auto b = lat.dual_edge_of(l, m, 0, 1);
  ASSERT_TRUE(a && b);
  EXPECT_EQ(a->tail, b->head);
  EXPECT_EQ(a->head, b->tail);
  EXPECT_EQ(a->direction, -b->direction);
  EXPECT_EQ(a->crossed, b->crossed);
}

TEST(DualEdge, EqualHeightsDrawNoArrow) {
  const TorusLattice lat(4);
  EXPECT_FALSE(lat.dual_edge_of(0, 1, 2, 2).has_value());
}

TEST(DualEdge, NonAdjacentRejected) {
  const TorusLattice lat(4);
  EXPECT_THROW(lat.dual_edge_of(0, lat.index({2, 0}), 1, 0), std::invalid_argument);
  EXPECT_THROW(lat.dual_edge_of(0, lat.index({1, 1}), 1, 0), std::invalid_argument);
  const TorusLattice two(2);
  EXPECT_THROW(two.dual_edge_of(0, 1, 1, 0), std::invalid_argument);
}

TEST(DualEdge, GeometryInvariantsOnAllEdges) {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> h(-3, 3);
  for (int n = 3; n <= 9; ++n) {
    const TorusLattice lat(n);
    for (int id = 0; id < lat.edge_count(); ++id) {
      const PrimalEdge pe = lat.edge(id);
      const Vertex l = pe.from;
      const Vertex m = lat.edge_head(pe);
      int a = h(rng), b = h(rng);
      if (a == b) ++a;
      const auto e = lat.dual_edge_of(l, m, a, b);
      ASSERT_TRUE(e);
      // head - tail == direction (mod N), direction is a unit vector
      EXPECT_EQ(lat.wrap(e->head.x - e->tail.x), lat.wrap(e->direction.x));
      EXPECT_EQ(lat.wrap(e->head.y - e->tail.y), lat.wrap(e->direction.y));
      EXPECT_EQ(std::abs(e->direction.x) + std::abs(e->direction.y), 1);
      // order independence
      EXPECT_EQ(*e, *lat.dual_edge_of(m, l, b, a));
      // negating heights reverses the arrow
      const auto neg = lat.dual_edge_of(l, m, -a, -b);
      EXPECT_EQ(neg->direction, -e->direction);
      // the higher endpoint is on the left
      EXPECT_EQ(lat.left_vertex(*e), a > b ? l : m);
    }
  }
}
