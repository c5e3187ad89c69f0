// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "latis/latis.hpp"
#include "oracles.hpp"

using namespace latis;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// ---- 1 ----------------------------------------------------------------------

void decoder_endpoints(Verdict& v) {
  // With F the identity on [0, 1] a decoder returns its quantile level.
  const double r = std::sqrt(2.0) / 2.0;
  const double q0 = bayes_quad_level(0.0), q1 = bayes_quad_level(1.0);
  const double m0 = bayes_median_step_level(0.0), m1 = bayes_median_step_level(1.0);
  v.check(std::abs(q0 - (1 - r)) <= 1e-9, "bayes-quad(0)");
  v.check(std::abs(q1 - r) <= 1e-9, "bayes-quad(1)");
  v.check(std::abs(m0 - 0.25) <= 1e-9, "bayes-median-step(0)");
  v.check(std::abs(m1 - 0.75) <= 1e-9, "bayes-median-step(1)");
  v.detail << " quad(0)=" << fmt(q0, 12) << " quad(1)=" << fmt(q1, 12) << " step(0)=" << fmt(m0, 12)
           << " step(1)=" << fmt(m1, 12);
}

// ---- 2, 3 -------------------------------------------------------------------

struct PairNumbers {
  double exact, inverse_cdf, bayes_quad, median_step, seconds;
};

PairNumbers pair_experiment(double rho) {
  const auto t0 = Clock::now();
  CopulaOptions opt;
  opt.overrides[0] = -rho;
  const auto truth = generate_copula(topology::pair(), std::vector<Marginal>(2, Marginal::beta(1, 1)), 1, opt);
  const auto train = sample(truth, 10000, 11);
  FitOptions fo;
  const auto cdf_model = fit_latent_model(truth.topology(), train, fo);
  fo.encoder = EncoderKind::MedianStep;
  const auto step_model = fit_latent_model(truth.topology(), train, fo);
  DecimationConfig cfg;
  cfg.replicates = 100000;
  const auto res = decimate(truth, {cdf_model, step_model},
                            parse_predictor_list("exact,inverse-cdf,bayes-quad,median-step"), cfg);
  auto l1 = [&](PredictorKind k) { return 100.0 * res.at(0.5, k)->mean_l1; };
  return {l1(PredictorKind::Exact), l1(PredictorKind::InverseCdf), l1(PredictorKind::BayesQuad),
          l1(PredictorKind::MedianStep), seconds_since(t0)};
}

double excess(double x, double exact) { return 100.0 * (x - exact) / exact; }

void pair_rho05(Verdict& v) {
  const auto n = pair_experiment(0.5);
  const double e_inv = excess(n.inverse_cdf, n.exact), e_quad = excess(n.bayes_quad, n.exact),
               e_step = excess(n.median_step, n.exact);
  v.check(std::abs(n.exact - 20.96) <= 0.3, "exact");
  v.check(e_inv <= 1.5, "inverse-cdf excess");
  v.check(e_quad >= 2.0 && e_quad <= 9.0, "bayes-quad excess");
  v.check(e_step >= 4.0 && e_step <= 11.0, "median-step excess");
  v.check(n.seconds <= 120.0, "runtime");
  v.detail << " exact=" << fmt(n.exact, 2) << " inverse-cdf=" << fmt(n.inverse_cdf, 2) << " (+" << fmt(e_inv, 1)
           << "%) bayes-quad=" << fmt(n.bayes_quad, 2) << " (+" << fmt(e_quad, 1)
           << "%) median-step=" << fmt(n.median_step, 2) << " (+" << fmt(e_step, 1) << "%) " << fmt(n.seconds, 1)
           << "s";
}

void pair_rho09(Verdict& v) {
  const auto n = pair_experiment(0.9);
  const double e_inv = excess(n.inverse_cdf, n.exact), e_quad = excess(n.bayes_quad, n.exact),
               e_step = excess(n.median_step, n.exact);
  v.check(std::abs(n.exact - 9.83) <= 0.3, "exact");
  v.check(e_inv <= 2.0, "inverse-cdf excess");
  v.check(e_quad >= 40.0, "bayes-quad excess");
  v.check(e_step >= 40.0, "median-step excess");
  v.check(n.seconds <= 120.0, "runtime");
  v.detail << " exact=" << fmt(n.exact, 2) << " inverse-cdf=" << fmt(n.inverse_cdf, 2) << " (+" << fmt(e_inv, 1)
           << "%) bayes-quad=" << fmt(n.bayes_quad, 2) << " (+" << fmt(e_quad, 1)
           << "%) median-step=" << fmt(n.median_step, 2) << " (+" << fmt(e_step, 1) << "%) " << fmt(n.seconds, 1)
           << "s";
}

// ---- 4, 5 -------------------------------------------------------------------

void bp_oracle(Verdict& v) {
  std::mt19937_64 rng(404);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto topo = oracle::random_tree(1 + t % 10, rng);
    const auto rm = oracle::random_marginals(topo, rng);
    const auto run = bp_run(IsingModel::assemble(topo, rm.p1, rm.pairs, 1.0));
    v.check(run.report.converged, "tree " + std::to_string(t) + " did not converge");
    const auto joint = oracle::bethe_joint(topo, rm.p1, rm.pairs, 1.0);
    for (std::size_t i = 0; i < topo.num_nodes(); ++i)
      worst = std::max(worst, std::abs(run.state.belief1(i) - oracle::marginal1(joint, i)));
  }
  v.check(worst <= 1e-8, "sup error");
  v.detail << " 50 trees, sup error " << worst;
}

void mbp_oracle(Verdict& v) {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  double worst = 0.0;
  bool exact_constraints = true;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + t % 9;
    const auto topo = oracle::random_tree(n, rng);
    const auto rm = oracle::random_marginals(topo, rng);
    std::vector<std::size_t> nodes(n);
    std::iota(nodes.begin(), nodes.end(), 0);
    std::shuffle(nodes.begin(), nodes.end(), rng);
    const std::size_t k = std::min<std::size_t>(n, 1 + t % 3);
    Constraints c;
    std::map<std::size_t, double> targets;
    for (std::size_t m = 0; m < k; ++m) {
      const double b1 = u(rng);
      c[nodes[m]] = {1 - b1, b1};
      targets[nodes[m]] = b1;
    }
    const auto run = mbp_run(IsingModel::assemble(topo, rm.p1, rm.pairs, 1.0), c);
    v.check(run.report.converged, "tree " + std::to_string(t) + " did not converge");
    const auto fitted = oracle::ipf(oracle::bethe_joint(topo, rm.p1, rm.pairs, 1.0), targets);
    for (std::size_t i = 0; i < n; ++i)
      worst = std::max(worst, std::abs(run.state.belief1(i) - oracle::marginal1(fitted, i)));
    for (const auto& [i, b] : c) exact_constraints = exact_constraints && run.state.beliefs[i] == b;
  }
  v.check(worst <= 1e-6, "sup error");
  v.check(exact_constraints, "constrained beliefs");
  v.detail << " 50 trees, sup error " << worst << ", constrained beliefs exact: " << (exact_constraints ? "yes" : "no");
}

// ---- 6 ----------------------------------------------------------------------

void cut_convergence(Verdict& v) {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> w(0.05, 5.0), b(0.02, 0.98);
  std::size_t max_sweeps = 0;
  int converged = 0, guaranteed = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 3 + t % 8;
    std::vector<Belief> phi(n);
    for (auto& p : phi) p = {w(rng), w(rng)};
    std::vector<Factor> factors;
    for (std::size_t i = 0; i + 1 < n; ++i) factors.push_back({{i, i + 1}, {w(rng), w(rng), w(rng), w(rng)}});
    const FactorGraph g(n, phi, factors);
    const double b0 = b(rng), b1 = b(rng);
    const Constraints c{{0, Belief{1 - b0, b0}}, {n - 1, Belief{1 - b1, b1}}};
    if (graph_cut_check(g, {0, n - 1}) == ConvergenceGuarantee::Guaranteed) ++guaranteed;
    Schedule s;
    s.max_sweeps = 10000;
    const auto run = mbp_run(g, c, s);
    if (run.report.converged) ++converged;
    max_sweeps = std::max(max_sweeps, run.report.sweeps);
  }
  // Factors a = {1,2,4,6}, b = {2,5,3,7}, c = {7,6}; black nodes 2 and 7, gray node 4.
  const std::vector<std::vector<std::size_t>> scopes{{0, 1, 3, 5}, {1, 4, 2, 6}, {6, 5}};
  const auto black = graph_cut_check(7, scopes, {1, 6});
  const auto gray = graph_cut_check(7, scopes, {1, 6, 3});
  v.check(converged == 100, "convergence");
  v.check(guaranteed == 100, "chain guarantee");
  v.check(black == ConvergenceGuarantee::Guaranteed, "black nodes");
  v.check(gray == ConvergenceGuarantee::Unknown, "gray node");
  v.detail << " chains converged " << converged << "/100 (max " << max_sweeps << " sweeps), guaranteed " << guaranteed
           << "/100, black=" << to_string(black) << ", with gray=" << to_string(gray);
}

// ---- 7 ----------------------------------------------------------------------

PairSamples gaussian_pairs(std::size_t n, double rho, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  PairSamples out(n);
  for (auto& p : out) {
    const double a = z(rng);
    p = {a, rho * a + std::sqrt(1 - rho * rho) * z(rng)};
  }
  return out;
}

std::pair<Encoder, Encoder> encoders_for(const PairSamples& pairs, EncoderKind kind) {
  std::vector<double> xi, xj;
  for (const auto& p : pairs) {
    xi.push_back(p.xi);
    xj.push_back(p.xj);
  }
  return {Encoder(kind, make_cdf(xi)), Encoder(kind, make_cdf(xj))};
}

void em_properties(Verdict& v) {
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(-0.95, 0.95);
  double worst_drop = 0.0;
  bool inside = true;
  for (int t = 0; t < 100; ++t) {
    const auto pairs = gaussian_pairs(200 + 10 * t, u(rng), rng);
    const auto [ei, ej] = encoders_for(pairs, EncoderKind::Cdf);
    const auto fit = em_fit(pairs, ei, ej);
    double prev = -INFINITY;
    for (double p : fit.trace) {
      const PairwiseMarginal m{ei.p1(), ej.p1(), p, 0};
      inside = inside && m.valid();
      const double l = log_likelihood(pairs, ei, ej, m);
      worst_drop = std::max(worst_drop, prev - l);
      prev = l;
    }
  }
  double worst_freq = 0.0;
  std::size_t max_iterations = 0;
  for (int t = 0; t < 20; ++t) {
    const auto pairs = gaussian_pairs(301, u(rng), rng);
    const auto [ei, ej] = encoders_for(pairs, EncoderKind::MedianStep);
    double freq = 0.0;
    for (const auto& p : pairs) freq += (p.xi >= ei.threshold() && p.xj >= ej.threshold()) ? 1.0 : 0.0;
    freq /= static_cast<double>(pairs.size());
    const auto fit = em_fit(pairs, ei, ej);
    const PairwiseMarginal m = fit.marginal;
    inside = inside && m.valid();
    const double target = clamp_to_domain(m, freq, 1e-9);
    worst_freq = std::max(worst_freq, std::abs(fit.trace.at(1) - target));
    max_iterations = std::max(max_iterations, fit.iterations);
  }
  v.check(worst_drop <= 1e-12, "likelihood ascent");
  v.check(worst_freq <= 1e-12, "frequency count");
  v.check(inside, "domain");
  v.detail << " 100 datasets, largest likelihood drop " << worst_drop << "; median-step first iterate vs frequency "
           << worst_freq << " (fits stop after " << max_iterations << " iterations); all iterates in D: "
           << (inside ? "yes" : "no");
}

// ---- 8 ----------------------------------------------------------------------

void stochastic_ordering(Verdict& v) {
  std::mt19937_64 rng(808);
  std::uniform_int_distribution<int> size(20, 400);
  std::gamma_distribution<double> g(0.7);
  std::size_t checked = 0, violations = 0;
  for (int t = 0; t < 20; ++t) {
    std::vector<double> xs(static_cast<std::size_t>(size(rng)));
    for (auto& x : xs) x = t % 2 ? g(rng) : std::round(g(rng) * 4) / 4;  // odd datasets carry ties
    const auto cdf = make_cdf(xs);
    for (auto kind : {EncoderKind::Cdf, EncoderKind::MedianStep}) {
      const auto c = conditional_cdfs(Encoder(kind, cdf));
      for (double x : xs) {
        ++checked;
        if (!(c.f1(x) <= c.f(x) + 1e-12 && c.f(x) <= c.f0(x) + 1e-12)) ++violations;
      }
    }
  }
  v.check(violations == 0, "ordering");
  v.detail << " 20 datasets x 2 encoders, " << checked << " points, violations " << violations;
}

// ---- 9 ----------------------------------------------------------------------

struct TreeScenario {
  CopulaModel truth;
  LatentModel fitted;
  CalibrationResult calibration;
  double setup_seconds;
};

TreeScenario tree_scenario() {
  const auto t0 = Clock::now();
  const auto topo = topology::regular_tree(3, 100);
  auto truth = generate_copula(topo, std::vector<Marginal>(100, Marginal::beta(0.7, 0.3)), 3);
  auto fitted = fit_latent_model(topo, sample(truth, 10000, 4));
  const auto cal = calibrate(fitted.ising());
  return {std::move(truth), fitted.with_alpha(cal.alpha), cal, seconds_since(t0)};
}

// Largest gap between a curve and its best non-increasing fit (pool adjacent violators).
double antitonic_gap(const std::vector<double>& y, const std::vector<double>& w) {
  struct Block {
    double mean, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t k = 0; k < y.size(); ++k) {
    blocks.push_back({y[k], w[k], 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean < blocks.back().mean) {
      const auto b = blocks.back();
      blocks.pop_back();
      auto& a = blocks.back();
      a.mean = (a.mean * a.weight + b.mean * b.weight) / (a.weight + b.weight);
      a.weight += b.weight;
      a.count += b.count;
    }
  }
  double gap = 0.0;
  std::size_t k = 0;
  for (const auto& b : blocks)
    for (std::size_t m = 0; m < b.count; ++m, ++k) gap = std::max(gap, std::abs(y[k] - b.mean));
  return gap;
}

void tree_decimation(Verdict& v, const TreeScenario& sc) {
  constexpr std::size_t kTarget = 500, kChunk = 10;
  constexpr double kBudget = 600.0;
  const auto t0 = Clock::now();
  const auto preds = parse_predictor_list("inverse-cdf,median,exact");
  DecimationConfig cfg;
  cfg.seed = 9;
  cfg.replicates = kChunk;
  DecimationResult res;
  while (res.replicates < kTarget && seconds_since(t0) < kBudget) {
    cfg.first_replicate = res.replicates;
    res = res.replicates ? merge_results(res, decimate(sc.truth, {sc.fitted}, preds, cfg))
                         : decimate(sc.truth, {sc.fitted}, preds, cfg);
  }
  const double secs = seconds_since(t0);

  std::vector<double> curve, weights;
  bool dominated = true;
  double worst_margin = -INFINITY, worst_bin = 0.0;
  for (const auto& r : res.rows) {
    if (r.predictor != PredictorKind::InverseCdf) continue;
    curve.push_back(r.mean_l1);
    weights.push_back(static_cast<double>(r.n_points));
    const auto med = res.at(r.bin_low, PredictorKind::Median);
    if (r.bin_low >= 0.1 - 1e-12 && med) {
      const double margin = r.mean_l1 - med->mean_l1;
      if (margin > worst_margin) worst_margin = margin, worst_bin = r.bin_low;
      dominated = dominated && margin <= 0.0;
    }
  }
  const double gap = antitonic_gap(curve, weights);
  v.check(dominated, "inverse-cdf above median");
  v.check(gap <= 0.005, "non-increasing");
  v.check(res.replicates >= kTarget, "replicates within budget");
  v.check(secs + sc.setup_seconds <= kBudget, "runtime");
  v.detail << " alpha=" << fmt(sc.calibration.alpha) << ", " << res.replicates << " replicates in "
           << fmt(secs + sc.setup_seconds, 0) << "s; worst (inverse-cdf - median) at bins >= 0.1: "
           << fmt(100 * worst_margin, 2) << "e-2 at " << fmt(worst_bin, 2) << "; antitonic gap " << fmt(gap) << "; mBP "
           << res.mbp_nonconverged << "/" << res.mbp_runs << " runs unconverged";
}

// ---- 10 ---------------------------------------------------------------------

void alpha_calibration(Verdict& v, const TreeScenario& sc) {
  // Evaluation count on a synthetic threshold and on real models.
  std::size_t worst_evals = calibrate([](double a) { return a <= 0.36 ? 0.0 : 1.0; }).evaluations;
  std::mt19937_64 rng(1010);
  double lowest_tree = 1.0;
  int flat_trees = 0, flat_trees_high = 0;
  for (int t = 0; t < 10; ++t) {
    const auto topo = oracle::random_tree(5 + 5 * t, rng);
    const auto rm = oracle::random_marginals(topo, rng);
    const auto model = IsingModel::assemble(topo, rm.p1, rm.pairs, 1.0);
    const auto r = calibrate(model);
    lowest_tree = std::min(lowest_tree, r.alpha);
    // Deviation profile on a grid: trees whose deviation stays below tau for every alpha.
    double peak = 0.0;
    for (int k = 1; k < 100; ++k) peak = std::max(peak, deviation(model.with_alpha(k / 100.0)));
    if (peak <= AlphaSearchConfig{}.tau) {
      ++flat_trees;
      if (r.alpha >= 0.99) ++flat_trees_high;
    }
    worst_evals = std::max(worst_evals, r.evaluations);
  }
  lowest_tree = std::min(lowest_tree, sc.calibration.alpha);
  worst_evals = std::max(worst_evals, sc.calibration.evaluations);

  const auto city = topology::grid_city();
  CopulaOptions opt;
  const std::set<std::size_t> ring(city.ring_links.begin(), city.ring_links.end());
  for (std::size_t e = 0; e < city.topology.num_edges(); ++e)
    if (ring.count(city.topology.edge(e).i) || ring.count(city.topology.edge(e).j)) opt.overrides[e] = -0.3;
  const auto truth = generate_copula(city.topology, std::vector<Marginal>(city.topology.num_nodes(), Marginal::beta(2, 3)),
                                     5, opt);
  const auto fitted = fit_latent_model(city.topology, sample(truth, 2000, 6));
  std::size_t saturated = 0;
  for (std::size_t e = 0; e < city.topology.num_edges(); ++e) {
    const auto& pm = fitted.ising().edge_marginal(e);
    if (pm.upper() - pm.p11 < 1e-6 || pm.p11 - pm.lower() < 1e-6) ++saturated;
  }
  const auto r = calibrate(fitted.ising());
  worst_evals = std::max(worst_evals, r.evaluations);

  v.check(worst_evals <= 9, "evaluations");
  v.check(lowest_tree >= 0.99, "trees");
  v.check(r.alpha > 0.0 && r.alpha < 1.0, "grid-city alpha");
  v.detail << " max evaluations " << worst_evals << ", lowest tree alpha " << fmt(lowest_tree) << " (trees with deviation <= tau on the whole alpha grid: "
           << flat_trees << "/10, of which " << flat_trees_high << " return >= 0.99)" << ", grid-city alpha "
           << fmt(r.alpha) << " (bracket [" << fmt(r.alpha) << ", " << fmt(r.upper) << "], " << saturated << "/"
           << city.topology.num_edges() << " fitted links at a bound of D)";
}

}  // namespace

int main() {
  int failures = 0;
  auto run = [&](int id, const std::string& name, const std::function<void(Verdict&)>& body) {
    Verdict v;
    const auto t0 = Clock::now();
    try {
      body(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " exception: " << e.what();
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "[PASS] " : "[FAIL] ") << id << ". " << name << " |" << v.detail.str() << " | "
              << fmt(seconds_since(t0), 1) << "s" << std::endl;
  };

  run(1, "decoder endpoint identities", decoder_endpoints);
  run(2, "pair experiment rho=0.5", pair_rho05);
  run(3, "pair experiment rho=0.9", pair_rho09);
  run(4, "BP equals brute-force marginals on trees", bp_oracle);
  run(5, "mirror BP equals IPF on trees", mbp_oracle);
  run(6, "cut-check convergence guarantee", cut_convergence);
  run(7, "EM properties", em_properties);
  run(8, "stochastic ordering of conditional cdfs", stochastic_ordering);
  std::optional<TreeScenario> tree;
  run(9, "tree decimation", [&](Verdict& v) {
    tree.emplace(tree_scenario());
    tree_decimation(v, *tree);
  });
  run(10, "alpha calibration", [&](Verdict& v) {
    if (!tree) tree.emplace(tree_scenario());
    alpha_calibration(v, *tree);
  });
  std::cout << (failures ? std::to_string(failures) + " criteria failed" : std::string("all criteria passed"))
            << std::endl;
  return failures ? 1 : 0;
}
