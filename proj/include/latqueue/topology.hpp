#pragma once

// Node sets with interference neighbourhoods: lattice tori, line segments and
// explicit weighted graphs. Every node belongs to its own neighbourhood with
// weight 1; neighbour weights are the kernel coefficients.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "latqueue/kernel.hpp"

namespace latqueue {

using QueueState = std::vector<std::int64_t>;

inline void validate_queue_state(std::span<const std::int64_t> x, std::size_t nodes) {
  if (x.size() != nodes) throw std::invalid_argument("queue state size mismatch");
  for (auto v : x)
    if (v < 0) throw std::invalid_argument("queue lengths must be nonnegative");
}

struct Neighbor {
  std::size_t index;
  double weight;
};

class Topology {
 public:
  enum class Kind { torus, line_segment, explicit_graph };

  // Torus with dims[k] nodes along axis k. Coordinates are centred,
  // axis k running over {-floor(dims[k]/2), ..., dims[k]-floor(dims[k]/2)-1},
  // and flat indices are row-major over shifted coordinates:
  //   flat = sum_k (c_k + floor(dims[k]/2)) * stride_k.
  // Requires dims[k] > 2L so distinct kernel offsets reach distinct nodes.
  static Topology torus(std::vector<std::int64_t> dims, InterferenceKernel kernel) {
    if (static_cast<int>(dims.size()) != kernel.dimension())
      throw std::invalid_argument("torus dims arity must match kernel dimension");
    for (auto d : dims)
      if (d < 1) throw std::invalid_argument("torus dims must be positive");
    for (auto d : dims)
      if (d <= 2 * kernel.radius())
        throw std::invalid_argument("torus dims must exceed twice the kernel radius");
    Topology t;
    t.kind_ = Kind::torus;
    t.dims_ = dims;
    t.kernel_ = std::move(kernel);
    std::size_t n = 1;
    for (auto d : dims) n *= static_cast<std::size_t>(d);
    t.neighbors_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      Offset ci = t.coord_of(i);
      for (const auto& [off, a] : t.kernel_->support()) {
        Offset cj(ci.size());
        for (std::size_t k = 0; k < ci.size(); ++k) {
          std::int64_t v = (ci[k] + off[k]) % dims[k];
          std::int64_t lo = -(dims[k] / 2);
          if (v < lo) v += dims[k];
          if (v >= lo + dims[k]) v -= dims[k];
          cj[k] = v;
        }
        t.neighbors_[i].push_back({t.flat_of(cj), a});
      }
      t.sort_neighbors(i);
    }
    return t;
  }

  // Path of `length` nodes 0..length-1; kernel offsets falling outside are dropped.
  static Topology line_segment(std::int64_t length, InterferenceKernel kernel) {
    if (kernel.dimension() != 1)
      throw std::invalid_argument("line segment requires a 1-d kernel");
    if (length < 1) throw std::invalid_argument("line segment length must be >= 1");
    Topology t;
    t.kind_ = Kind::line_segment;
    t.dims_ = {length};
    t.kernel_ = std::move(kernel);
    t.neighbors_.resize(static_cast<std::size_t>(length));
    for (std::int64_t i = 0; i < length; ++i) {
      for (const auto& [off, a] : t.kernel_->support()) {
        std::int64_t j = i + off[0];
        if (j < 0 || j >= length) continue;
        t.neighbors_[static_cast<std::size_t>(i)].push_back({static_cast<std::size_t>(j), a});
      }
      t.sort_neighbors(static_cast<std::size_t>(i));
    }
    return t;
  }

  // Undirected weighted graph on n nodes; edges (i,j,w) with i != j are
  // mirrored automatically, each node gets self weight 1.
  static Topology explicit_graph(std::size_t n,
                                 const std::vector<std::tuple<std::size_t, std::size_t, double>>& edges) {
    if (n == 0) throw std::invalid_argument("graph must have at least one node");
    Topology t;
    t.kind_ = Kind::explicit_graph;
    t.dims_ = {static_cast<std::int64_t>(n)};
    std::vector<std::vector<double>> w(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) w[i][i] = 1.0;
    for (const auto& [i, j, a] : edges) {
      if (i >= n || j >= n) throw std::invalid_argument("edge endpoint out of range");
      if (i == j) throw std::invalid_argument("self edges are implicit with weight 1");
      if (a < 0) throw std::invalid_argument("edge weights must be nonnegative");
      if (w[i][j] != 0.0 && w[i][j] != a)
        throw std::invalid_argument("conflicting duplicate edge weights");
      w[i][j] = a;
      w[j][i] = a;
    }
    t.neighbors_.resize(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (w[i][j] > 0) t.neighbors_[i].push_back({j, w[i][j]});
    return t;
  }

  Kind kind() const { return kind_; }
  std::size_t node_count() const { return neighbors_.size(); }
  const std::vector<Neighbor>& neighbors(std::size_t i) const { return neighbors_[i]; }
  const std::vector<std::int64_t>& dims() const { return dims_; }
  const std::optional<InterferenceKernel>& kernel() const { return kernel_; }

  int lattice_dimension() const {
    return kind_ == Kind::torus ? static_cast<int>(dims_.size()) : 0;
  }

  // Multi-hop routing requires this shape: torus with the 0/1 kernel.
  bool is_unit_lattice() const {
    return kind_ == Kind::torus && kernel_ && kernel_->is_nearest_neighbor();
  }

  // The 2d wrap neighbours at unit offsets, in axis order (-e_1, +e_1, -e_2, ...).
  std::vector<std::size_t> lattice_neighbors(std::size_t i) const {
    if (kind_ != Kind::torus) throw std::logic_error("lattice neighbours need a torus");
    Offset c = coord_of(i);
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      for (int sgn : {-1, +1}) {
        Offset cj = c;
        std::int64_t lo = -(dims_[k] / 2);
        std::int64_t v = cj[k] + sgn;
        if (v < lo) v += dims_[k];
        if (v >= lo + dims_[k]) v -= dims_[k];
        cj[k] = v;
        out.push_back(flat_of(cj));
      }
    }
    return out;
  }

  Offset coord_of(std::size_t flat) const {
    Offset c(dims_.size());
    std::size_t rem = flat;
    for (std::size_t k = dims_.size(); k-- > 0;) {
      auto d = static_cast<std::size_t>(dims_[k]);
      c[k] = static_cast<std::int64_t>(rem % d) - dims_[k] / 2;
      rem /= d;
    }
    return c;
  }

  std::size_t flat_of(const Offset& c) const {
    std::size_t flat = 0;
    for (std::size_t k = 0; k < dims_.size(); ++k) {
      std::int64_t shifted = c[k] + dims_[k] / 2;
      if (shifted < 0 || shifted >= dims_[k]) throw std::out_of_range("coordinate out of range");
      flat = flat * static_cast<std::size_t>(dims_[k]) + static_cast<std::size_t>(shifted);
    }
    return flat;
  }

 private:
  void sort_neighbors(std::size_t i) {
    std::sort(neighbors_[i].begin(), neighbors_[i].end(),
              [](const Neighbor& a, const Neighbor& b) { return a.index < b.index; });
    for (std::size_t k = 0; k + 1 < neighbors_[i].size(); ++k)
      if (neighbors_[i][k].index == neighbors_[i][k + 1].index)
        throw std::logic_error("duplicate neighbour entry");
  }

  Kind kind_ = Kind::torus;
  std::vector<std::int64_t> dims_;
  std::optional<InterferenceKernel> kernel_;
  std::vector<std::vector<Neighbor>> neighbors_;
};

}  // namespace latqueue
