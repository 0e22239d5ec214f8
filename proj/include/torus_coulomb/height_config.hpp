#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "torus_coulomb/lattice.hpp"

namespace torus_coulomb {

/// Integer height field pinned at the origin (x_0 = 0).
class HeightConfig {
 public:
  explicit HeightConfig(const TorusLattice& lat) : heights_(lat.size(), 0) {}

  HeightConfig(const TorusLattice& lat, std::vector<int> heights) : heights_(std::move(heights)) {
    if (static_cast<int>(heights_.size()) != lat.size()) {
      throw std::invalid_argument("HeightConfig: expected one height per vertex");
    }
    if (heights_[0] != 0) throw std::invalid_argument("HeightConfig: x_0 must be 0 (pinning)");
  }

  /// Shift an arbitrary field so that the origin sits at height 0.
  static HeightConfig repinned(const TorusLattice& lat, std::vector<int> heights) {
    if (heights.empty()) throw std::invalid_argument("HeightConfig: empty field");
    const int x0 = heights[0];
    for (int& h : heights) h -= x0;
    return HeightConfig(lat, std::move(heights));
  }

  int operator[](Vertex v) const { return heights_[static_cast<std::size_t>(v)]; }
  int size() const { return static_cast<int>(heights_.size()); }
  std::span<const int> values() const { return heights_; }

  /// Change the height at a non-origin vertex.
  void add(Vertex v, int delta) {
    if (v == 0) throw std::invalid_argument("HeightConfig: the origin is pinned");
    heights_.at(static_cast<std::size_t>(v)) += delta;
  }

  friend bool operator==(const HeightConfig&, const HeightConfig&) = default;

 private:
  std::vector<int> heights_;
};

/// H(x) = sum over the 2N^2 undirected edges of (x_i - x_j)^2.
inline long hamiltonian(const TorusLattice& lat, std::span<const int> x) {
  long h = 0;
  for (Vertex v = 0; v < lat.size(); ++v) {
    const auto nb = lat.neighbors(v);
    const long de = x[v] - x[nb[0]];
    const long dn = x[v] - x[nb[1]];
    h += de * de + dn * dn;
  }
  return h;
}

inline long hamiltonian(const TorusLattice& lat, const HeightConfig& x) {
  return hamiltonian(lat, x.values());
}

/// Change of H when x_v is replaced by x_v + delta.
inline long local_energy_change(const TorusLattice& lat, std::span<const int> x, Vertex v,
                                int delta) {
  long dh = 0;
  for (Vertex u : lat.neighbors(v)) {
    const long diff = x[v] - x[u];
    dh += 2L * delta * diff + static_cast<long>(delta) * delta;
  }
  return dh;
}

}  // namespace torus_coulomb
