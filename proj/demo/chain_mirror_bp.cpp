// Mirror BP on a chain with both ends observed, plus the cut-based
// convergence diagnostic.

#include <iostream>

#include "latis/latis.hpp"

using namespace latis;

int main() {
  const auto topo = topology::chain(6);
  const auto truth = generate_copula(topo, std::vector<Marginal>(6, Marginal::beta(1, 1)), 11);
  const auto model = fit_latent_model(topo, sample(truth, 4000, 12));

  const std::map<std::size_t, double> obs{{0, 0.9}, {5, 0.2}};
  std::cout << "cut check: " << to_string(graph_cut_check(topo, {0, 5})) << "\n";
  const auto run = mbp_run(model.ising(), impose_observations(model, obs));
  std::cout << "converged=" << run.report.converged << " sweeps=" << run.report.sweeps << "\n";

  const LatentPredictor inv(model, DecoderKind::InverseCdf);
  const auto exact = exact_predictor(truth, obs, {1, 2, 3, 4});
  for (std::size_t i = 0; i < 6; ++i) {
    std::cout << "node " << i << "  b(1)=" << run.state.belief1(i);
    if (!obs.count(i)) std::cout << "  predicted=" << inv.decode(i, run.state.belief1(i)) << "  exact=" << exact.at(i);
    std::cout << "\n";
  }
}
