#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

namespace torus_coulomb {

using Vertex = int;

/// Integer 2-vector. Used for primal coordinates, displacements, direction
/// vectors of dual edges and contour periods.
struct Vec2 {
  int x = 0;
  int y = 0;

  friend constexpr bool operator==(Vec2, Vec2) = default;
  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  constexpr Vec2 operator-() const { return {-x, -y}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
};

/// Dual vertex, stored as the south-west primal corner of its cell; the
/// geometric position carries an implicit (1/2, 1/2) offset.
struct DualVertex {
  int x = 0;
  int y = 0;
  friend constexpr bool operator==(DualVertex, DualVertex) = default;
};

enum class Axis : int { east = 0, north = 1 };

/// Undirected primal edge, identified by its west (or south) endpoint and
/// the axis it points along.
struct PrimalEdge {
  Vertex from = 0;
  Axis axis = Axis::east;

  constexpr int id() const { return 2 * from + static_cast<int>(axis); }
  friend constexpr bool operator==(PrimalEdge, PrimalEdge) = default;
};

/// A dual edge carrying an arrow. The larger height is on the left when
/// looking along `direction`.
struct DirectedDualEdge {
  DualVertex tail;
  DualVertex head;
  Vec2 direction;
  PrimalEdge crossed;

  friend constexpr bool operator==(const DirectedDualEdge&, const DirectedDualEdge&) = default;
};

/// N x N box with periodic boundary conditions. Vertices are indexed
/// row-major, v = y * N + x; vertex 0 is the origin.
class TorusLattice {
 public:
  explicit TorusLattice(int side) : n_(side) {
    if (side < 2) {
      throw std::invalid_argument("TorusLattice: side length must be >= 2, got " +
                                  std::to_string(side));
    }
  }

  int side() const { return n_; }
  int size() const { return n_ * n_; }
  int edge_count() const { return 2 * n_ * n_; }

  int wrap(int a) const {
    const int r = a % n_;
    return r < 0 ? r + n_ : r;
  }

  Vertex index(Vec2 c) const { return wrap(c.y) * n_ + wrap(c.x); }
  Vec2 coord(Vertex v) const {
    check(v);
    return {v % n_, v / n_};
  }

  /// Displacement j - i reduced to [0, N)^2.
  Vec2 displacement(Vertex i, Vertex j) const {
    const Vec2 a = coord(i);
    const Vec2 b = coord(j);
    return {wrap(b.x - a.x), wrap(b.y - a.y)};
  }

  bool contains(Vertex v) const { return v >= 0 && v < size(); }

  void check(Vertex v) const {
    if (!contains(v)) {
      throw std::out_of_range("vertex index " + std::to_string(v) + " outside [0, " +
                              std::to_string(size()) + ")");
    }
  }

  /// Periodic nearest neighbours in the order east, north, west, south. For
  /// N = 2 the east/west (and north/south) entries coincide.
  std::array<Vertex, 4> neighbors(Vertex v) const {
    const Vec2 c = coord(v);
    return {index({c.x + 1, c.y}), index({c.x, c.y + 1}), index({c.x - 1, c.y}),
            index({c.x, c.y - 1})};
  }

  /// Row k of the lattice Laplacian. Multi-edges (N = 2) accumulate.
  std::map<Vertex, int> laplacian_row(Vertex k) const {
    std::map<Vertex, int> row;
    row[k] = -4;
    for (Vertex u : neighbors(k)) row[u] += 1;
    return row;
  }

  PrimalEdge edge(int id) const {
    if (id < 0 || id >= edge_count()) throw std::out_of_range("primal edge id out of range");
    return {id / 2, static_cast<Axis>(id % 2)};
  }

  /// Far endpoint of a primal edge (east or north neighbour of `from`).
  Vertex edge_head(PrimalEdge e) const {
    const Vec2 c = coord(e.from);
    return e.axis == Axis::east ? index({c.x + 1, c.y}) : index({c.x, c.y + 1});
  }

  /// Dual edge crossing `e`, oriented so that the higher endpoint is on the
  /// left. `from_higher` says whether e.from is the higher endpoint.
  DirectedDualEdge dual_edge(PrimalEdge e, bool from_higher) const {
    const Vec2 c = coord(e.from);
    DualVertex a, b;
    Vec2 dir;
    if (e.axis == Axis::east) {
      // vertical dual edge between (x, y-1) and (x, y)
      a = {c.x, wrap(c.y - 1)};
      b = {c.x, c.y};
      dir = {0, 1};
    } else {
      // horizontal dual edge between (x-1, y) and (x, y), heading west when south is higher
      a = {c.x, c.y};
      b = {wrap(c.x - 1), c.y};
      dir = {-1, 0};
    }
    if (from_higher) return {a, b, dir, e};
    return {b, a, -dir, e};
  }

  /// Primal edge joining two adjacent vertices. Throws for non-adjacent
  /// pairs, and for N = 2 where the edge is not unique.
  PrimalEdge edge_between(Vertex l, Vertex m) const {
    check(l);
    check(m);
    if (n_ == 2 && l != m) {
      const Vec2 d = displacement(l, m);
      if (d.x + d.y == 1) {
        throw std::invalid_argument("edge_between: two parallel edges join these vertices for N = 2");
      }
    }
    const auto nb = neighbors(l);
    if (nb[0] == m) return {l, Axis::east};
    if (nb[1] == m) return {l, Axis::north};
    if (nb[2] == m) return {m, Axis::east};
    if (nb[3] == m) return {m, Axis::north};
    throw std::invalid_argument("vertices " + std::to_string(l) + " and " + std::to_string(m) +
                                " are not nearest neighbours");
  }

  /// The arrow drawn on {l, m}^* for heights x_l, x_m; empty when the
  /// heights agree (no arrow).
  std::optional<DirectedDualEdge> dual_edge_of(Vertex l, Vertex m, long x_l, long x_m) const {
    const PrimalEdge e = edge_between(l, m);
    if (x_l == x_m) return std::nullopt;
    const bool l_is_from = e.from == l;
    const bool from_higher = l_is_from ? x_l > x_m : x_m > x_l;
    return dual_edge(e, from_higher);
  }

  /// Endpoint of the crossed primal edge lying to the left of the arrow.
  Vertex left_vertex(const DirectedDualEdge& d) const {
    const bool from_left = d.crossed.axis == Axis::east ? d.direction.y > 0 : d.direction.x < 0;
    return from_left ? d.crossed.from : edge_head(d.crossed);
  }

  Vertex right_vertex(const DirectedDualEdge& d) const {
    const bool from_left = d.crossed.axis == Axis::east ? d.direction.y > 0 : d.direction.x < 0;
    return from_left ? edge_head(d.crossed) : d.crossed.from;
  }

  int dual_index(DualVertex d) const { return wrap(d.y) * n_ + wrap(d.x); }
  DualVertex dual_vertex(int id) const { return {id % n_, id / n_}; }
  DualVertex dual_step(DualVertex d, Vec2 dir) const {
    return {wrap(d.x + dir.x), wrap(d.y + dir.y)};
  }

 private:
  int n_;
};

}  // namespace torus_coulomb
