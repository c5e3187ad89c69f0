// Predict one coordinate of a correlated pair from the other, with every
// decoder, and compare against the conditional median of the true model.

#include <iomanip>
#include <iostream>

#include "latis/latis.hpp"

using namespace latis;

int main() {
  CopulaOptions opt;
  opt.overrides[0] = -0.7;
  const auto truth = generate_copula(topology::pair(), {Marginal::beta(2, 5), Marginal::beta(2, 5)}, 1, opt);
  const auto train = sample(truth, 5000, 2);

  FitOptions fo;
  const auto cdf_model = fit_latent_model(truth.topology(), train, fo);
  fo.encoder = EncoderKind::MedianStep;
  const auto step_model = fit_latent_model(truth.topology(), train, fo);
  std::cout << "fitted p11 (cdf) = " << cdf_model.ising().edge_marginal(0).p11 << "\n";

  std::cout << std::fixed << std::setprecision(4) << "   x0    exact  inv-cdf  b-quad  b-step  b-mean\n";
  for (double x0 : {0.05, 0.15, 0.3, 0.5}) {
    const std::map<std::size_t, double> obs{{0, x0}};
    const auto run_cdf = mbp_run(cdf_model.ising(), impose_observations(cdf_model, obs));
    const auto run_step = mbp_run(step_model.ising(), impose_observations(step_model, obs));
    std::cout << std::setw(6) << x0 << ' ' << std::setw(7) << exact_predictor(truth, obs, {1}).at(1);
    for (auto k : {DecoderKind::InverseCdf, DecoderKind::BayesQuadCdf})
      std::cout << ' ' << std::setw(7) << predict(cdf_model, run_cdf.state, k).at(1);
    for (auto k : {DecoderKind::BayesMedianStep, DecoderKind::BayesMeanStep})
      std::cout << ' ' << std::setw(7) << predict(step_model, run_step.state, k).at(1);
    std::cout << '\n';
  }
}
