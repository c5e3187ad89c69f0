#pragma once

// Latent Ising model in tempered Bethe form:
//   p(s) ∝ prod_E (p_ij(s_i,s_j) / (p_i(s_i) p_j(s_j)))^alpha  prod_V p_i(s_i)

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "latis/graph.hpp"
#include "latis/pairwise_em.hpp"

namespace latis {

using Belief = std::array<double, 2>;                 // indexed by state s
using Table2 = std::array<std::array<double, 2>, 2>;  // indexed [s_i][s_j]

class IsingModel {
public:
  static constexpr double kMarginalTolerance = 1e-9;

  IsingModel() = default;

  static IsingModel assemble(GraphTopology topology, std::vector<double> node_p1,
                             std::vector<PairwiseMarginal> marginals, double alpha) {
    if (node_p1.size() != topology.num_nodes())
      throw std::invalid_argument("node marginal count does not match the topology");
    if (marginals.size() != topology.num_edges())
      throw std::invalid_argument("every edge needs a pairwise marginal");
    for (std::size_t i = 0; i < node_p1.size(); ++i)
      if (!(node_p1[i] > 0.0 && node_p1[i] < 1.0))
        throw std::invalid_argument("node " + std::to_string(i) + " has a degenerate marginal");
    for (std::size_t e = 0; e < marginals.size(); ++e) {
      const auto& edge = topology.edge(e);
      const auto& m = marginals[e];
      if (std::abs(m.p_i1 - node_p1[edge.i]) > kMarginalTolerance ||
          std::abs(m.p_j1 - node_p1[edge.j]) > kMarginalTolerance)
        throw std::invalid_argument("inconsistent node marginals on edge " + std::to_string(e));
    }
    IsingModel model;
    model.topology_ = std::move(topology);
    model.node_p1_ = std::move(node_p1);
    model.marginals_ = std::move(marginals);
    model.set_alpha(alpha);
    return model;
  }

  /// Same fitted marginals, couplings recomputed at a new temperature.
  IsingModel with_alpha(double alpha) const {
    IsingModel copy = *this;
    copy.set_alpha(alpha);
    return copy;
  }

  const GraphTopology& topology() const { return topology_; }
  std::size_t num_nodes() const { return topology_.num_nodes(); }
  double alpha() const { return alpha_; }
  double node_p1(std::size_t i) const { return node_p1_.at(i); }
  const std::vector<double>& node_p1() const { return node_p1_; }
  const PairwiseMarginal& edge_marginal(std::size_t e) const { return marginals_.at(e); }
  const std::vector<PairwiseMarginal>& edge_marginals() const { return marginals_; }

  Belief phi(std::size_t i) const { return {1.0 - node_p1_.at(i), node_p1_.at(i)}; }
  /// Coupling table oriented as (edge(e).i, edge(e).j).
  const Table2& psi(std::size_t e) const { return psi_.at(e); }

private:
  void set_alpha(double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    alpha_ = alpha;
    psi_.assign(marginals_.size(), Table2{});
    for (std::size_t e = 0; e < marginals_.size(); ++e) {
      const auto& m = marginals_[e];
      for (int si = 0; si < 2; ++si)
        for (int sj = 0; sj < 2; ++sj) {
          const double cell = m.table(si, sj);
          if (!(cell > 0.0))
            throw std::domain_error("infinite coupling on edge " + std::to_string(e));
          const double ratio = cell / (m.p_i(si) * m.p_j(sj));
          psi_[e][si][sj] = alpha == 0.0 ? 1.0 : std::pow(ratio, alpha);
        }
    }
  }

  GraphTopology topology_;
  std::vector<double> node_p1_;
  std::vector<PairwiseMarginal> marginals_;
  std::vector<Table2> psi_;
  double alpha_ = 1.0;
};

inline IsingModel assemble(GraphTopology topology, std::vector<double> node_p1,
                           std::vector<PairwiseMarginal> marginals, double alpha) {
  return IsingModel::assemble(std::move(topology), std::move(node_p1), std::move(marginals), alpha);
}

/// Brute-force normalized joint over {0,1}^N; bit i of the index is s_i.
inline std::vector<double> exact_joint(const IsingModel& model) {
  constexpr std::size_t kMaxNodes = 20;
  const std::size_t n = model.num_nodes();
  if (n > kMaxNodes) throw std::invalid_argument("exact joint limited to 20 nodes");
  const std::size_t states = std::size_t{1} << n;
  std::vector<double> p(states);
  double z = 0.0;
  const auto& edges = model.topology().edges();
  for (std::size_t s = 0; s < states; ++s) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) w *= model.phi(i)[(s >> i) & 1U];
    for (std::size_t e = 0; e < edges.size(); ++e)
      w *= model.psi(e)[(s >> edges[e].i) & 1U][(s >> edges[e].j) & 1U];
    p[s] = w;
    z += w;
  }
  for (double& v : p) v /= z;
  return p;
}

inline Belief node_marginal(const std::vector<double>& joint, std::size_t i) {
  Belief b{0.0, 0.0};
  for (std::size_t s = 0; s < joint.size(); ++s) b[(s >> i) & 1U] += joint[s];
  return b;
}

inline Table2 pair_marginal(const std::vector<double>& joint, std::size_t i, std::size_t j) {
  Table2 t{};
  for (std::size_t s = 0; s < joint.size(); ++s) t[(s >> i) & 1U][(s >> j) & 1U] += joint[s];
  return t;
}

}  // namespace latis
