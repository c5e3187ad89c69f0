#pragma once

// Belief propagation on binary factor graphs, and the mirror variant that
// imposes soft constraints b_i = b*_i at observed nodes: an observed node
// answers each factor with b*_i / m_{a->i} instead of the usual product.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "latis/graph.hpp"
#include "latis/ising.hpp"
#include "latis/latent_model.hpp"

namespace latis {

/// A factor over binary variables. Bit k of a table index is the state of vars[k].
struct Factor {
  std::vector<std::size_t> vars;
  std::vector<double> table;
};

class FactorGraph {
public:
  struct Slot {
    std::size_t factor;
    std::size_t position;  // index of the variable inside the factor scope
  };

  FactorGraph(std::size_t num_vars, std::vector<Belief> phi, std::vector<Factor> factors)
      : phi_(std::move(phi)), factors_(std::move(factors)), incidence_(num_vars) {
    if (phi_.size() != num_vars) throw std::invalid_argument("one local field per variable required");
    for (std::size_t a = 0; a < factors_.size(); ++a) {
      const auto& f = factors_[a];
      if (f.vars.empty()) throw std::invalid_argument("empty factor scope");
      if (f.vars.size() > 20) throw std::invalid_argument("factor arity too large");
      if (f.table.size() != (std::size_t{1} << f.vars.size()))
        throw std::invalid_argument("factor table size does not match its scope");
      std::set<std::size_t> unique(f.vars.begin(), f.vars.end());
      if (unique.size() != f.vars.size()) throw std::invalid_argument("repeated variable in factor scope");
      for (std::size_t k = 0; k < f.vars.size(); ++k) {
        if (f.vars[k] >= num_vars) throw std::invalid_argument("factor variable out of range");
        incidence_[f.vars[k]].push_back({a, k});
      }
    }
  }

  /// Pairwise factor graph of a latent Ising model: phi_i = p_i, psi_ij tempered ratios.
  static FactorGraph from_model(const IsingModel& model) {
    std::vector<Belief> phi(model.num_nodes());
    for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = model.phi(i);
    std::vector<Factor> factors;
    factors.reserve(model.topology().num_edges());
    for (std::size_t e = 0; e < model.topology().num_edges(); ++e) {
      const auto& edge = model.topology().edge(e);
      const auto& psi = model.psi(e);
      // index = s_i + 2 s_j
      factors.push_back({{edge.i, edge.j}, {psi[0][0], psi[1][0], psi[0][1], psi[1][1]}});
    }
    return FactorGraph(model.num_nodes(), std::move(phi), std::move(factors));
  }

  std::size_t num_vars() const { return incidence_.size(); }
  std::size_t num_factors() const { return factors_.size(); }
  const Belief& phi(std::size_t i) const { return phi_[i]; }
  const Factor& factor(std::size_t a) const { return factors_[a]; }
  const std::vector<Factor>& factors() const { return factors_; }
  const std::vector<Slot>& incidence(std::size_t i) const { return incidence_[i]; }

private:
  std::vector<Belief> phi_;
  std::vector<Factor> factors_;
  std::vector<std::vector<Slot>> incidence_;
};

struct Schedule {
  double damping = 0.0;  ///< new = (1 - damping) * update + damping * old
  std::size_t max_sweeps = 10000;
  double tol = 1e-9;  ///< on the max L-inf message change over one sweep
};

struct ConvergenceReport {
  bool converged = false;
  std::size_t sweeps = 0;
  double residual = 0.0;
};

using Constraints = std::map<std::size_t, Belief>;

struct BeliefState {
  std::vector<std::vector<Belief>> messages;  ///< messages[a][k] = m_{a -> vars[k]}
  std::vector<Belief> beliefs;
  std::vector<std::vector<double>> factor_beliefs;
  std::vector<std::optional<Belief>> constraints;

  double belief1(std::size_t i) const { return beliefs.at(i)[1]; }
  bool constrained(std::size_t i) const { return constraints.at(i).has_value(); }
};

struct PropagationResult {
  BeliefState state;
  ConvergenceReport report;
};

namespace detail {

// Messages in the mirror ratio are floored so hard constraints b*(s) = 0 never divide by zero.
inline constexpr double kMessageFloor = 1e-12;

inline Belief normalized(Belief b) {
  const double z = b[0] + b[1];
  return {b[0] / z, b[1] / z};
}

class Engine {
public:
  Engine(const FactorGraph& g, const Constraints& constraints) : g_(g) {
    state_.constraints.assign(g.num_vars(), std::nullopt);
    for (const auto& [i, b] : constraints) {
      if (i >= g.num_vars()) throw std::invalid_argument("constraint on unknown node " + std::to_string(i));
      if (!(b[0] >= 0.0 && b[1] >= 0.0) || std::abs(b[0] + b[1] - 1.0) > 1e-9)
        throw std::invalid_argument("constraint on node " + std::to_string(i) + " is not normalized");
      state_.constraints[i] = b;
    }
    state_.messages.resize(g.num_factors());
    for (std::size_t a = 0; a < g.num_factors(); ++a)
      state_.messages[a].assign(g.factor(a).vars.size(), Belief{0.5, 0.5});
  }

  PropagationResult run(const Schedule& sched) {
    if (!(sched.damping >= 0.0 && sched.damping < 1.0)) throw std::invalid_argument("damping must lie in [0, 1)");
    ConvergenceReport report;
    while (report.sweeps < sched.max_sweeps) {
      double residual = 0.0;
      for (std::size_t a = 0; a < g_.num_factors(); ++a)
        for (std::size_t k = 0; k < g_.factor(a).vars.size(); ++k) {
          Belief upd = factor_to_var(a, k);
          Belief& old = state_.messages[a][k];
          if (sched.damping > 0.0)
            upd = normalized({(1 - sched.damping) * upd[0] + sched.damping * old[0],
                              (1 - sched.damping) * upd[1] + sched.damping * old[1]});
          residual = std::max({residual, std::abs(upd[0] - old[0]), std::abs(upd[1] - old[1])});
          old = upd;
        }
      ++report.sweeps;
      report.residual = residual;
      if (residual < sched.tol) {
        report.converged = true;
        break;
      }
    }
    finalize();
    return {std::move(state_), report};
  }

private:
  // n_{i->a}: the usual product for free nodes, the mirror ratio for constrained ones.
  Belief var_to_factor(std::size_t i, std::size_t a, std::size_t pos) const {
    if (const auto& c = state_.constraints[i]) {
      const Belief& m = state_.messages[a][pos];
      return normalized({(*c)[0] / std::max(m[0], kMessageFloor), (*c)[1] / std::max(m[1], kMessageFloor)});
    }
    Belief n = g_.phi(i);
    for (const auto& slot : g_.incidence(i)) {
      if (slot.factor == a) continue;
      const Belief& m = state_.messages[slot.factor][slot.position];
      n[0] *= m[0];
      n[1] *= m[1];
    }
    return normalized(n);
  }

  std::vector<Belief> incoming(std::size_t a) const {
    const auto& f = g_.factor(a);
    std::vector<Belief> n(f.vars.size());
    for (std::size_t l = 0; l < f.vars.size(); ++l) n[l] = var_to_factor(f.vars[l], a, l);
    return n;
  }

  // m_{a->i}(s_i) = sum over the other variables of psi_a * prod n_{j->a}.
  Belief factor_to_var(std::size_t a, std::size_t k) const {
    const auto& f = g_.factor(a);
    std::array<Belief, 20> n;  // arity is capped at 20 by FactorGraph
    for (std::size_t l = 0; l < f.vars.size(); ++l)
      if (l != k) n[l] = var_to_factor(f.vars[l], a, l);
    Belief m{0.0, 0.0};
    for (std::size_t s = 0; s < f.table.size(); ++s) {
      double w = f.table[s];
      for (std::size_t l = 0; l < f.vars.size() && w != 0.0; ++l)
        if (l != k) w *= n[l][(s >> l) & 1U];
      m[(s >> k) & 1U] += w;
    }
    return normalized(m);
  }

  void finalize() {
    state_.beliefs.resize(g_.num_vars());
    for (std::size_t i = 0; i < g_.num_vars(); ++i) {
      if (state_.constraints[i]) {
        state_.beliefs[i] = *state_.constraints[i];
        continue;
      }
      Belief b = g_.phi(i);
      for (const auto& slot : g_.incidence(i)) {
        const Belief& m = state_.messages[slot.factor][slot.position];
        b[0] *= m[0];
        b[1] *= m[1];
      }
      state_.beliefs[i] = normalized(b);
    }
    state_.factor_beliefs.resize(g_.num_factors());
    for (std::size_t a = 0; a < g_.num_factors(); ++a) {
      const auto& f = g_.factor(a);
      const auto n = incoming(a);
      auto& t = state_.factor_beliefs[a];
      t.assign(f.table.size(), 0.0);
      double z = 0.0;
      for (std::size_t s = 0; s < f.table.size(); ++s) {
        double w = f.table[s];
        for (std::size_t l = 0; l < f.vars.size(); ++l) w *= n[l][(s >> l) & 1U];
        t[s] = w;
        z += w;
      }
      for (double& v : t) v /= z;
    }
  }

  const FactorGraph& g_;
  BeliefState state_;
};

}  // namespace detail

inline PropagationResult mbp_run(const FactorGraph& graph, const Constraints& constraints,
                                 const Schedule& schedule = {}) {
  return detail::Engine(graph, constraints).run(schedule);
}

inline PropagationResult bp_run(const FactorGraph& graph, const Schedule& schedule = {}) {
  return mbp_run(graph, {}, schedule);
}

inline PropagationResult mbp_run(const IsingModel& model, const Constraints& constraints,
                                 const Schedule& schedule = {}) {
  return mbp_run(FactorGraph::from_model(model), constraints, schedule);
}

inline PropagationResult bp_run(const IsingModel& model, const Schedule& schedule = {}) {
  return bp_run(FactorGraph::from_model(model), schedule);
}

/// b*_i = (1 - Lambda_i(x_i), Lambda_i(x_i)) for every observed node.
inline Constraints impose_observations(const LatentModel& model, const std::map<std::size_t, double>& observed) {
  Constraints c;
  for (const auto& [i, x] : observed) {
    if (i >= model.num_nodes()) throw std::invalid_argument("observation for unknown node " + std::to_string(i));
    const double b1 = model.encoder(i).encode(x);
    c[i] = {1.0 - b1, b1};
  }
  return c;
}

/// Decodes beliefs of unconstrained nodes into predictions, one decoder per node.
class LatentPredictor {
public:
  LatentPredictor(const LatentModel& model, DecoderKind kind) {
    decoders_.reserve(model.num_nodes());
    for (std::size_t i = 0; i < model.num_nodes(); ++i) decoders_.emplace_back(kind, model.encoder(i));
  }

  double decode(std::size_t i, double b1) const { return decoders_.at(i).decode(b1); }

  std::map<std::size_t, double> predict(const BeliefState& beliefs) const {
    std::map<std::size_t, double> out;
    for (std::size_t i = 0; i < decoders_.size(); ++i)
      if (!beliefs.constrained(i)) out[i] = decoders_[i].decode(std::clamp(beliefs.belief1(i), 0.0, 1.0));
    return out;
  }

private:
  std::vector<Decoder> decoders_;
};

inline std::map<std::size_t, double> predict(const LatentModel& model, const BeliefState& beliefs,
                                             DecoderKind decoder) {
  return LatentPredictor(model, decoder).predict(beliefs);
}

// ---- convergence diagnostic ------------------------------------------------

enum class ConvergenceGuarantee { Guaranteed, Unknown };

inline std::string_view to_string(ConvergenceGuarantee g) {
  return g == ConvergenceGuarantee::Guaranteed ? "guaranteed" : "unknown";
}

/// Cuts the factor graph at the observed nodes (each observed node becomes one
/// leaf clone per incident factor) and reports `Guaranteed` when every
/// resulting component is a tree holding at most two clones.
inline ConvergenceGuarantee graph_cut_check(std::size_t num_vars,
                                            std::span<const std::vector<std::size_t>> scopes,
                                            const std::set<std::size_t>& observed) {
  // Vertex ids: variables, then factors, then clones appended on the fly.
  std::vector<std::size_t> parent(num_vars + scopes.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](std::size_t v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::vector<bool> is_clone(parent.size(), false);
  std::vector<std::pair<std::size_t, std::size_t>> links;
  for (std::size_t a = 0; a < scopes.size(); ++a)
    for (std::size_t v : scopes[a]) {
      if (v >= num_vars) throw std::invalid_argument("factor variable out of range");
      std::size_t other = v;
      if (observed.contains(v)) {
        other = parent.size();
        parent.push_back(other);
        is_clone.push_back(true);
      }
      links.emplace_back(num_vars + a, other);
      parent[find(num_vars + a)] = find(other);
    }
  std::map<std::size_t, std::size_t> vertices, edges, clones;
  for (std::size_t v = 0; v < parent.size(); ++v) {
    if (v < num_vars && observed.contains(v)) continue;  // replaced by its clones
    const auto r = find(v);
    ++vertices[r];
    if (is_clone[v]) ++clones[r];
  }
  for (const auto& [a, v] : links) ++edges[find(a)];
  for (const auto& [root, nv] : vertices) {
    if (edges[root] + 1 != nv) return ConvergenceGuarantee::Unknown;
    if (clones[root] > 2) return ConvergenceGuarantee::Unknown;
  }
  return ConvergenceGuarantee::Guaranteed;
}

inline ConvergenceGuarantee graph_cut_check(const GraphTopology& topology, const std::set<std::size_t>& observed) {
  std::vector<std::vector<std::size_t>> scopes;
  for (const auto& e : topology.edges()) scopes.push_back({e.i, e.j});
  return graph_cut_check(topology.num_nodes(), scopes, observed);
}

inline ConvergenceGuarantee graph_cut_check(const FactorGraph& graph, const std::set<std::size_t>& observed) {
  std::vector<std::vector<std::size_t>> scopes;
  for (const auto& f : graph.factors()) scopes.push_back(f.vars);
  return graph_cut_check(graph.num_vars(), scopes, observed);
}

}  // namespace latis
