// A short decimation run on a pair, written as the results CSV.

#include <iostream>

#include "latis/latis.hpp"

using namespace latis;

int main(int argc, char** argv) {
  const double rho = argc > 1 ? std::stod(argv[1]) : 0.9;
  CopulaOptions opt;
  opt.overrides[0] = -rho;
  const auto truth = generate_copula(topology::pair(), std::vector<Marginal>(2, Marginal::beta(1, 1)), 1, opt);
  const auto train = sample(truth, 10000, 2);
  FitOptions fo;
  const auto cdf_model = fit_latent_model(truth.topology(), train, fo);
  fo.encoder = EncoderKind::MedianStep;
  const auto step_model = fit_latent_model(truth.topology(), train, fo);

  DecimationConfig cfg;
  cfg.replicates = 5000;
  const auto res = decimate(truth, {cdf_model, step_model},
                            parse_predictor_list("inverse-cdf,bayes-quad,median-step,knn,exact,median"), cfg, &train);
  write_results_csv(res, std::cout);
}
