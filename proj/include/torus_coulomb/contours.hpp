#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torus_coulomb/height_config.hpp"
#include "torus_coulomb/lattice.hpp"

namespace torus_coulomb::contours {

/// Closed chain of directed dual edges; period = sum of direction vectors.
struct Contour {
  std::vector<DirectedDualEdge> edges;
  Vec2 period;

  int length() const { return static_cast<int>(edges.size()); }
  bool winding() const { return period != Vec2{}; }
};

enum class SeparationKind {
  loop,          ///< one non-winding contour separates i from j
  winding_pair,  ///< two winding contours with opposite periods separate i from j
};

inline const char* to_string(SeparationKind k) {
  return k == SeparationKind::loop ? "loop" : "winding_pair";
}

struct SeparatingContour {
  SeparationKind kind = SeparationKind::loop;
  std::vector<Contour> contours;
  int length = 0;
  std::vector<Vertex> inside;     ///< L_i: vertices not separated from i
  std::vector<char> inside_mask;  ///< indicator of L_i by vertex
  std::vector<char> crossed;      ///< indicator by primal edge id

  bool crosses(PrimalEdge e) const { return crossed[static_cast<std::size_t>(e.id())] != 0; }
};

inline void require_contour_lattice(const TorusLattice& lat) {
  if (lat.side() < 4) {
    throw std::domain_error("contour machinery needs N >= 4, got N = " +
                            std::to_string(lat.side()));
  }
}

// ---------------------------------------------------------------------------
// Level components and boundaries

/// Indicator of C_i, the nearest-neighbour component of {k : x_k >= x_i}
/// containing i.
inline std::vector<char> level_component_mask(const TorusLattice& lat, const HeightConfig& x,
                                              Vertex i) {
  lat.check(i);
  std::vector<char> in(static_cast<std::size_t>(lat.size()), 0);
  std::vector<Vertex> stack{i};
  in[i] = 1;
  const int level = x[i];
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    for (Vertex u : lat.neighbors(v)) {
      if (!in[u] && x[u] >= level) {
        in[u] = 1;
        stack.push_back(u);
      }
    }
  }
  return in;
}

inline std::vector<Vertex> level_component(const TorusLattice& lat, const HeightConfig& x,
                                           Vertex i) {
  const auto mask = level_component_mask(lat, x, i);
  std::vector<Vertex> out;
  for (Vertex v = 0; v < lat.size(); ++v) {
    if (mask[v]) out.push_back(v);
  }
  return out;
}

inline std::vector<char> to_mask(const TorusLattice& lat, std::span<const Vertex> set) {
  std::vector<char> mask(static_cast<std::size_t>(lat.size()), 0);
  for (Vertex v : set) {
    lat.check(v);
    mask[v] = 1;
  }
  return mask;
}

/// Directed dual edges of the boundary of C, in primal-edge order, each
/// keeping C on its left.
inline std::vector<DirectedDualEdge> boundary_edges(const TorusLattice& lat,
                                                    std::span<const char> in) {
  std::vector<DirectedDualEdge> out;
  for (int id = 0; id < lat.edge_count(); ++id) {
    const PrimalEdge e = lat.edge(id);
    const bool a = in[e.from] != 0;
    const bool b = in[lat.edge_head(e)] != 0;
    if (a != b) out.push_back(lat.dual_edge(e, a));
  }
  return out;
}

/// Sum of direction vectors over the boundary of C. Zero for every C.
inline Vec2 boundary_balance(const TorusLattice& lat, std::span<const char> in) {
  Vec2 sum;
  for (const auto& e : boundary_edges(lat, in)) sum += e.direction;
  return sum;
}

/// Continuation at a dual vertex where four boundary edges meet. The two
/// strands are bent so that they cut off the north-west and south-east
/// corners: arriving eastward leaves north, southward leaves west,
/// northward leaves east, westward leaves south.
constexpr Vec2 corner_turn(Vec2 incoming) {
  if (incoming == Vec2{1, 0}) return {0, 1};
  if (incoming == Vec2{0, -1}) return {-1, 0};
  if (incoming == Vec2{0, 1}) return {1, 0};
  return {0, -1};
}

/// Decompose the boundary of C into closed contours, resolving four-edge
/// dual vertices with `corner_turn`. Empty when C is empty or all of Lambda.
inline std::vector<Contour> boundary_contours(const TorusLattice& lat, std::span<const char> in) {
  const auto edges = boundary_edges(lat, in);
  std::vector<std::array<int, 2>> out_of(static_cast<std::size_t>(lat.size()), {-1, -1});
  for (int k = 0; k < static_cast<int>(edges.size()); ++k) {
    auto& slot = out_of[lat.dual_index(edges[k].tail)];
    (slot[0] < 0 ? slot[0] : slot[1]) = k;
  }
  std::vector<char> used(edges.size(), 0);
  std::vector<Contour> result;
  for (int start = 0; start < static_cast<int>(edges.size()); ++start) {
    if (used[start]) continue;
    Contour c;
    int cur = start;
    while (!used[cur]) {
      used[cur] = 1;
      c.edges.push_back(edges[cur]);
      c.period += edges[cur].direction;
      const auto& slot = out_of[lat.dual_index(edges[cur].head)];
      if (slot[1] < 0) {
        cur = slot[0];
      } else {
        const Vec2 want = corner_turn(edges[cur].direction);
        cur = edges[slot[0]].direction == want ? slot[0] : slot[1];
      }
    }
    if (cur != start) throw std::logic_error("boundary_contours: open chain in boundary");
    result.push_back(std::move(c));
  }
  return result;
}

inline std::vector<Contour> boundary_contours(const TorusLattice& lat,
                                              std::span<const Vertex> set) {
  const auto mask = to_mask(lat, set);
  return boundary_contours(lat, std::span<const char>(mask));
}

// ---------------------------------------------------------------------------
// Separation

inline void mark_crossed(std::vector<char>& crossed, const Contour& c) {
  for (const auto& e : c.edges) crossed[static_cast<std::size_t>(e.crossed.id())] = 1;
}

/// Component of `from` in Lambda after removing the crossed primal edges.
inline std::vector<char> component_avoiding(const TorusLattice& lat,
                                            std::span<const char> crossed, Vertex from) {
  std::vector<char> seen(static_cast<std::size_t>(lat.size()), 0);
  std::vector<Vertex> stack{from};
  seen[from] = 1;
  while (!stack.empty()) {
    const Vertex v = stack.back();
    stack.pop_back();
    const auto nb = lat.neighbors(v);
    const std::array<int, 4> edge_ids{2 * v, 2 * v + 1, 2 * nb[2], 2 * nb[3] + 1};
    for (int d = 0; d < 4; ++d) {
      if (crossed[edge_ids[d]] || seen[nb[d]]) continue;
      seen[nb[d]] = 1;
      stack.push_back(nb[d]);
    }
  }
  return seen;
}

inline bool separates(const TorusLattice& lat, std::span<const char> crossed, Vertex i, Vertex j) {
  return !component_avoiding(lat, crossed, i)[j];
}

/// gamma_{i,j}(x) for x with x_i > x_j, together with L_i(gamma_{i,j}).
inline SeparatingContour separating_contour(const TorusLattice& lat, const HeightConfig& x,
                                            Vertex i, Vertex j) {
  require_contour_lattice(lat);
  lat.check(i);
  lat.check(j);
  if (x[i] <= x[j]) {
    throw std::invalid_argument("separating_contour: requires x_i > x_j");
  }
  const auto in = level_component_mask(lat, x, i);
  auto all = boundary_contours(lat, std::span<const char>(in));

  SeparatingContour sep;
  sep.crossed.assign(static_cast<std::size_t>(lat.edge_count()), 0);
  std::vector<char> scratch(sep.crossed.size());
  std::vector<std::size_t> loops, winders;
  for (std::size_t k = 0; k < all.size(); ++k) {
    if (all[k].winding()) {
      winders.push_back(k);
      continue;
    }
    std::fill(scratch.begin(), scratch.end(), 0);
    mark_crossed(scratch, all[k]);
    if (separates(lat, scratch, i, j)) loops.push_back(k);
  }
  if (loops.size() > 1) {
    throw std::logic_error("separating_contour: several non-winding contours separate i from j");
  }
  if (loops.size() == 1) {
    sep.kind = SeparationKind::loop;
    sep.contours.push_back(std::move(all[loops[0]]));
  } else {
    if (winders.size() != 2) {
      throw std::logic_error("separating_contour: no separating loop and " +
                             std::to_string(winders.size()) + " winding contours");
    }
    sep.kind = SeparationKind::winding_pair;
    sep.contours.push_back(std::move(all[winders[0]]));
    sep.contours.push_back(std::move(all[winders[1]]));
  }
  for (const auto& c : sep.contours) {
    mark_crossed(sep.crossed, c);
    sep.length += c.length();
  }
  sep.inside_mask = component_avoiding(lat, sep.crossed, i);
  if (sep.inside_mask[j]) throw std::logic_error("separating_contour: winding pair does not separate");
  for (Vertex v = 0; v < lat.size(); ++v) {
    if (sep.inside_mask[v]) sep.inside.push_back(v);
  }
  for (const auto& c : sep.contours) {
    for (const auto& e : c.edges) {
      if (!sep.inside_mask[lat.left_vertex(e)] || sep.inside_mask[lat.right_vertex(e)]) {
        throw std::logic_error("separating_contour: contour does not bound L_i from the left");
      }
    }
  }
  return sep;
}

// ---------------------------------------------------------------------------
// Lowering map F_{i,j}

/// Lower x by one on `inside` and re-pin at the origin.
inline HeightConfig lower_map(const TorusLattice& lat, const HeightConfig& x,
                              std::span<const char> inside) {
  std::vector<int> y(x.values().begin(), x.values().end());
  const int shift = inside[0] ? -1 : 0;
  for (Vertex v = 0; v < lat.size(); ++v) y[v] = y[v] - (inside[v] ? 1 : 0) - shift;
  return HeightConfig(lat, std::move(y));
}

inline HeightConfig lower_map(const TorusLattice& lat, const HeightConfig& x, Vertex i, Vertex j) {
  const SeparatingContour sep = separating_contour(lat, x, i, j);
  return lower_map(lat, x, sep.inside_mask);
}

/// Inverse of the lowering map for a fixed contour: x_l = y_l + 1_L(l) - 1_L(0).
inline HeightConfig raise_map(const TorusLattice& lat, const HeightConfig& y,
                              std::span<const char> inside) {
  std::vector<int> x(y.values().begin(), y.values().end());
  const int shift = inside[0] ? 1 : 0;
  for (Vertex v = 0; v < lat.size(); ++v) x[v] = x[v] + (inside[v] ? 1 : 0) - shift;
  return HeightConfig(lat, std::move(x));
}

// ---------------------------------------------------------------------------
// Exhaustive contour enumeration

struct ContourCounts {
  std::map<int, std::uint64_t> loops;          ///< non-winding, by length
  std::map<int, std::uint64_t> winding_pairs;  ///< by total length

  std::uint64_t total(int length) const {
    std::uint64_t t = 0;
    if (auto it = loops.find(length); it != loops.end()) t += it->second;
    if (auto it = winding_pairs.find(length); it != winding_pairs.end()) t += it->second;
    return t;
  }
};

/// 3 l^2 3^l: upper bound on the number of separating contours of length l.
inline double counting_bound(int length) {
  return 3.0 * length * length * std::pow(3.0, length);
}

namespace detail {

struct DualCycle {
  std::vector<int> vertices;  // dual vertex ids, in walk order
  std::vector<DirectedDualEdge> edges;
  Vec2 period;
};

/// Directed dual edge from dual vertex `from` one step along `dir`.
inline DirectedDualEdge dual_step_edge(const TorusLattice& lat, int from, Vec2 dir) {
  const DualVertex t = lat.dual_vertex(from);
  const DualVertex h = lat.dual_step(t, dir);
  PrimalEdge crossed;
  if (dir.x == 0) {
    // vertical dual edge between (a, b) and (a, b + 1) crosses the east edge from (a, b + 1)
    const int b = dir.y > 0 ? t.y : h.y;
    crossed = {lat.index({t.x, b + 1}), Axis::east};
  } else {
    // horizontal dual edge between (a, b) and (a + 1, b) crosses the north edge from (a + 1, b)
    const int a = dir.x > 0 ? t.x : h.x;
    crossed = {lat.index({a + 1, t.y}), Axis::north};
  }
  return {t, h, dir, crossed};
}

/// Simple directed cycles of length <= max_len in the dual torus, each
/// undirected cycle reported in both orientations, rooted at its smallest
/// dual vertex.
inline constexpr std::array<Vec2, 4> kDualDirections{Vec2{1, 0}, Vec2{0, 1}, Vec2{-1, 0}, Vec2{0, -1}};

template <class Sink>
void simple_cycles(const TorusLattice& lat, int max_len, Sink&& sink) {
  const int nv = lat.size();
  std::vector<char> on_path(static_cast<std::size_t>(nv), 0);
  DualCycle path;
  for (int root = 0; root < nv; ++root) {
    on_path[root] = 1;
    path.vertices.assign(1, root);
    path.edges.clear();
    path.period = {};
    auto dfs = [&](auto&& self, int at) -> void {
      for (Vec2 d : kDualDirections) {
        const DirectedDualEdge e = dual_step_edge(lat, at, d);
        const int next = lat.dual_index(e.head);
        if (next == root && path.edges.size() + 1 >= 3) {
          path.edges.push_back(e);
          path.period += d;
          sink(path);
          path.period = path.period - d;
          path.edges.pop_back();
          continue;
        }
        if (next <= root || on_path[next]) continue;
        if (static_cast<int>(path.edges.size()) + 1 >= max_len) continue;
        on_path[next] = 1;
        path.vertices.push_back(next);
        path.edges.push_back(e);
        path.period += d;
        self(self, next);
        path.period = path.period - d;
        path.edges.pop_back();
        path.vertices.pop_back();
        on_path[next] = 0;
      }
    };
    dfs(dfs, root);
    on_path[root] = 0;
  }
}

}  // namespace detail

/// Count closed self-avoiding dual loops (and vertex-disjoint winding pairs
/// with opposite periods) of total length <= max_len that separate i from j
/// with i on their left. Geometric count; may exceed the set of contours
/// realised by configurations.
inline ContourCounts enumerate_separating_contours(const TorusLattice& lat, Vertex i, Vertex j,
                                                   int max_len, double max_walks = 1e9) {
  require_contour_lattice(lat);
  lat.check(i);
  lat.check(j);
  if (i == j) throw std::invalid_argument("enumerate_separating_contours: i and j must differ");
  if (max_len < 0) throw std::invalid_argument("enumerate_separating_contours: max_len < 0");
  const double walks = lat.size() * 4.0 * std::pow(3.0, std::max(max_len - 1, 0));
  if (walks > max_walks) {
    throw std::runtime_error("enumerate_separating_contours: search of ~" + std::to_string(walks) +
                             " walks exceeds the budget");
  }

  ContourCounts counts;
  for (int l = 1; l <= max_len; ++l) {
    counts.loops[l] = 0;
    counts.winding_pairs[l] = 0;
  }
  std::vector<char> crossed(static_cast<std::size_t>(lat.edge_count()), 0);
  auto bounds_i_on_left = [&](const std::vector<char>& comp, const std::vector<DirectedDualEdge>& es) {
    for (const auto& e : es) {
      if (!comp[lat.left_vertex(e)] || comp[lat.right_vertex(e)]) return false;
    }
    return true;
  };

  std::vector<detail::DualCycle> winders;
  const int min_partner = lat.side();
  detail::simple_cycles(lat, max_len, [&](const detail::DualCycle& c) {
    if (c.period != Vec2{}) {
      if (static_cast<int>(c.edges.size()) + min_partner <= max_len) winders.push_back(c);
      return;
    }
    std::fill(crossed.begin(), crossed.end(), 0);
    for (const auto& e : c.edges) crossed[e.crossed.id()] = 1;
    const auto comp = component_avoiding(lat, crossed, i);
    if (comp[j] || !bounds_i_on_left(comp, c.edges)) return;
    ++counts.loops[static_cast<int>(c.edges.size())];
  });

  std::vector<char> mark(static_cast<std::size_t>(lat.size()), 0);
  for (std::size_t a = 0; a < winders.size(); ++a) {
    for (int v : winders[a].vertices) mark[v] = 1;
    for (std::size_t b = a + 1; b < winders.size(); ++b) {
      const auto& ca = winders[a];
      const auto& cb = winders[b];
      const int len = static_cast<int>(ca.edges.size() + cb.edges.size());
      if (len > max_len || ca.period + cb.period != Vec2{}) continue;
      if (std::any_of(cb.vertices.begin(), cb.vertices.end(), [&](int v) { return mark[v] != 0; })) {
        continue;
      }
      std::fill(crossed.begin(), crossed.end(), 0);
      for (const auto& e : ca.edges) crossed[e.crossed.id()] = 1;
      for (const auto& e : cb.edges) crossed[e.crossed.id()] = 1;
      const auto comp = component_avoiding(lat, crossed, i);
      if (comp[j] || !bounds_i_on_left(comp, ca.edges) || !bounds_i_on_left(comp, cb.edges)) {
        continue;
      }
      ++counts.winding_pairs[len];
    }
    for (int v : winders[a].vertices) mark[v] = 0;
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Scalar bounds

/// phi(beta) = 480 (3 e^{-beta})^4.
inline double phi(double beta) {
  const double z = 3.0 * std::exp(-beta);
  return 480.0 * z * z * z * z;
}

/// M_beta = 2 phi (1 + phi) / (1 - phi)^3, the bound on E[(x_i - x_j)^2].
inline double m_beta(double beta) {
  const double p = phi(beta);
  if (!(p < 1.0)) {
    throw std::domain_error("m_beta: phi(beta) = " + std::to_string(p) + " >= 1");
  }
  return 2.0 * p * (1.0 + p) / ((1.0 - p) * (1.0 - p) * (1.0 - p));
}

// ---------------------------------------------------------------------------
// Sampling helpers for property checks

/// Heights uniform in [lo, hi], re-pinned at the origin.
template <class Rng>
HeightConfig random_config(const TorusLattice& lat, Rng& rng, int lo, int hi) {
  std::uniform_int_distribution<int> dist(lo, hi);
  std::vector<int> h(static_cast<std::size_t>(lat.size()));
  for (int& v : h) v = dist(rng);
  return HeightConfig::repinned(lat, std::move(h));
}

/// random_config conditioned on x_i > x_j by rejection.
template <class Rng>
HeightConfig random_config_above(const TorusLattice& lat, Rng& rng, Vertex i, Vertex j, int lo,
                                 int hi) {
  if (i == j || lo >= hi) throw std::invalid_argument("random_config_above: empty event");
  while (true) {
    HeightConfig x = random_config(lat, rng, lo, hi);
    if (x[i] > x[j]) return x;
  }
}

}  // namespace torus_coulomb::contours
