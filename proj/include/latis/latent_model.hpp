#pragma once

// A fitted latent model: the Ising part plus, per node, the empirical cdf and
// encoder that link it to the observed variable. Also the JSON model file.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "latis/dataset.hpp"
#include "latis/ising.hpp"
#include "latis/latent_coding.hpp"
#include "latis/pairwise_em.hpp"

namespace latis {

class LatentModel {
public:
  LatentModel(IsingModel ising, std::vector<Encoder> encoders)
      : ising_(std::move(ising)), encoders_(std::move(encoders)) {
    if (encoders_.size() != ising_.num_nodes())
      throw std::invalid_argument("one encoder per node required");
  }

  const IsingModel& ising() const { return ising_; }
  const GraphTopology& topology() const { return ising_.topology(); }
  std::size_t num_nodes() const { return ising_.num_nodes(); }
  double alpha() const { return ising_.alpha(); }
  const Encoder& encoder(std::size_t i) const { return encoders_.at(i); }
  const std::vector<Encoder>& encoders() const { return encoders_; }

  /// Encoder kind shared by all nodes; throws if nodes are mixed.
  EncoderKind encoder_kind() const {
    const auto k = encoders_.front().kind();
    for (const auto& e : encoders_)
      if (e.kind() != k) throw std::logic_error("model mixes encoder kinds");
    return k;
  }

  LatentModel with_alpha(double alpha) const { return LatentModel(ising_.with_alpha(alpha), encoders_); }

private:
  IsingModel ising_;
  std::vector<Encoder> encoders_;
};

struct FitOptions {
  EncoderKind encoder = EncoderKind::Cdf;
  double alpha = 1.0;
  EmOptions em;
};

/// Fits node encoders from per-node samples and one EM problem per edge.
inline LatentModel fit_latent_model(const GraphTopology& topology,
                                    std::span<const std::vector<double>> node_samples,
                                    std::span<const PairSamples> edge_samples,
                                    const FitOptions& opt = {}) {
  if (node_samples.size() != topology.num_nodes())
    throw std::invalid_argument("node sample count does not match the topology");
  if (edge_samples.size() != topology.num_edges())
    throw std::invalid_argument("edge sample count does not match the topology");
  std::vector<Encoder> encoders;
  std::vector<double> p1;
  encoders.reserve(node_samples.size());
  for (std::size_t i = 0; i < node_samples.size(); ++i) {
    try {
      encoders.emplace_back(opt.encoder, make_cdf(node_samples[i]));
    } catch (const std::exception& ex) {
      throw std::invalid_argument("node " + std::to_string(i) + ": " + ex.what());
    }
    p1.push_back(encoders.back().p1());
  }
  std::vector<PairwiseMarginal> marginals;
  marginals.reserve(topology.num_edges());
  for (std::size_t e = 0; e < topology.num_edges(); ++e) {
    const auto& edge = topology.edge(e);
    marginals.push_back(em_fit(edge_samples[e], encoders[edge.i], encoders[edge.j], opt.em).marginal);
  }
  return LatentModel(IsingModel::assemble(topology, std::move(p1), std::move(marginals), opt.alpha),
                     std::move(encoders));
}

/// Fits from complete outcomes: every edge uses all rows of the dataset.
inline LatentModel fit_latent_model(const GraphTopology& topology, const Dataset& data,
                                    const FitOptions& opt = {}) {
  if (data.cols != topology.num_nodes())
    throw std::invalid_argument("dataset width does not match the topology");
  std::vector<std::vector<double>> columns(data.cols);
  for (std::size_t c = 0; c < data.cols; ++c) columns[c] = data.column(c);
  std::vector<PairSamples> pairs(topology.num_edges());
  for (std::size_t e = 0; e < topology.num_edges(); ++e) {
    const auto& edge = topology.edge(e);
    pairs[e].reserve(data.rows);
    for (std::size_t r = 0; r < data.rows; ++r) pairs[e].push_back({data.at(r, edge.i), data.at(r, edge.j)});
  }
  return fit_latent_model(topology, columns, pairs, opt);
}

// ---- model file -----------------------------------------------------------

inline nlohmann::json to_json(const LatentModel& m) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < m.num_nodes(); ++i) {
    const auto& enc = m.encoder(i);
    const auto s = enc.cdf().sorted_samples();
    nodes.push_back({{"id", i},
                     {"encoder", std::string(to_string(enc.kind()))},
                     {"p1", enc.p1()},
                     {"cdf", std::vector<double>(s.begin(), s.end())}});
  }
  nlohmann::json edges = nlohmann::json::array();
  const auto& topo = m.topology();
  for (std::size_t e = 0; e < topo.num_edges(); ++e) {
    const auto& pm = m.ising().edge_marginal(e);
    edges.push_back({{"i", topo.edge(e).i}, {"j", topo.edge(e).j}, {"p11", pm.p11}, {"n", pm.n_samples}});
  }
  return {{"alpha", m.alpha()}, {"nodes", nodes}, {"edges", edges}};
}

inline LatentModel latent_model_from_json(const nlohmann::json& j) {
  const auto& jn = j.at("nodes");
  std::vector<Encoder> encoders;
  std::vector<double> p1;
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const auto& node = jn[i];
    if (node.contains("id") && node.at("id").get<std::size_t>() != i)
      throw std::runtime_error("model nodes must be listed in id order");
    const auto samples = node.at("cdf").get<std::vector<double>>();
    encoders.emplace_back(parse_encoder_kind(node.at("encoder").get<std::string>()), make_cdf(samples));
    if (node.contains("p1") && std::abs(node.at("p1").get<double>() - encoders.back().p1()) > 1e-12)
      throw std::runtime_error("node " + std::to_string(i) + ": p1 does not match its cdf samples");
    p1.push_back(encoders.back().p1());
  }
  std::vector<Edge> edges;
  std::vector<PairwiseMarginal> marginals;
  for (const auto& je : j.at("edges")) {
    const Edge e{je.at("i").get<std::size_t>(), je.at("j").get<std::size_t>()};
    if (e.i >= p1.size() || e.j >= p1.size()) throw std::runtime_error("edge endpoint out of range");
    edges.push_back(e);
    marginals.push_back({p1[e.i], p1[e.j], je.at("p11").get<double>(), je.value("n", std::size_t{0})});
  }
  GraphTopology topo(p1.size(), std::move(edges));
  return LatentModel(IsingModel::assemble(std::move(topo), std::move(p1), std::move(marginals),
                                          j.value("alpha", 1.0)),
                     std::move(encoders));
}

inline void save_latent_model(const LatentModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << to_json(m).dump(1) << '\n';
}

inline LatentModel load_latent_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return latent_model_from_json(nlohmann::json::parse(is));
}

}  // namespace latis
