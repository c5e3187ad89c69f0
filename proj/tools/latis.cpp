// Command-line front end: generate synthetic truth models, sample them, fit
// latent models, calibrate alpha, predict, and run decimation experiments.

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "latis/latis.hpp"

using namespace latis;

namespace {

struct TopologyChoice {
  GraphTopology topology;
  std::vector<std::size_t> ring_links;
};

// pair | chain:n | tree:c (c = interior connectivity, `nodes` variables) | grid-city
TopologyChoice parse_topology(const std::string& spec, std::size_t nodes) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  if (kind == "pair") return {topology::pair(), {}};
  if (kind == "chain") return {topology::chain(arg.empty() ? nodes : std::stoul(arg)), {}};
  if (kind == "tree") return {topology::regular_tree(arg.empty() ? 3 : std::stoul(arg), nodes), {}};
  if (kind == "grid-city") {
    auto city = topology::grid_city();
    return {std::move(city.topology), std::move(city.ring_links)};
  }
  throw std::invalid_argument("unknown topology: " + spec);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return is;
}

nlohmann::json read_json(const std::string& path) {
  auto is = open_in(path);
  return nlohmann::json::parse(is);
}

// node,x rows; an optional header line is skipped.
std::map<std::size_t, double> read_observations(const std::string& path) {
  auto is = open_in(path);
  std::map<std::size_t, double> obs;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("missing comma");
      obs[std::stoul(line.substr(0, comma))] = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      if (!first) throw std::runtime_error("malformed observation row: " + line);
    }
    first = false;
  }
  return obs;
}

// edge,x_i,x_j rows; an optional header line is skipped.
std::vector<PairSamples> read_pairs(const std::string& path, std::size_t num_edges) {
  auto is = open_in(path);
  std::vector<PairSamples> pairs(num_edges);
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    try {
      const auto e = std::stoul(a);
      if (e >= num_edges) throw std::runtime_error("edge id out of range in " + path + ": " + a);
      pairs[e].push_back({std::stod(b), std::stod(c)});
    } catch (const std::invalid_argument&) {
      if (!first) throw std::runtime_error("malformed pair row: " + line);
    }
    first = false;
  }
  return pairs;
}

void write_pairs(const Dataset& d, const GraphTopology& topo, std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << "edge,x_i,x_j\n";
  for (std::size_t e = 0; e < topo.num_edges(); ++e)
    for (std::size_t r = 0; r < d.rows; ++r)
      os << e << ',' << d.at(r, topo.edge(e).i) << ',' << d.at(r, topo.edge(e).j) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latent binary model for predicting real variables on a graph"};
  app.require_subcommand(1);

  // gen-model
  auto* gen = app.add_subcommand("gen-model", "generate a Gaussian-copula truth model");
  std::string gen_topology = "pair", gen_marginal = "beta:1,1", gen_out;
  std::size_t gen_nodes = 100;
  std::uint64_t gen_seed = 1;
  double gen_rho = std::numeric_limits<double>::quiet_NaN(), gen_ring = 0.3;
  gen->add_option("--topology", gen_topology, "pair | chain:n | tree:c | grid-city")->capture_default_str();
  gen->add_option("--nodes", gen_nodes, "variables in chain and tree topologies")->capture_default_str();
  gen->add_option("--marginal", gen_marginal, "beta:a,b for every node")->capture_default_str();
  gen->add_option("--rho", gen_rho, "pair: correlation of the latent Gaussians");
  gen->add_option("--ring-corr", gen_ring, "grid-city: partial correlation of ring links with adjacent links")
      ->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--out", gen_out)->required();

  // sample
  auto* smp = app.add_subcommand("sample", "draw outcomes from a truth model");
  std::string smp_truth, smp_out, smp_pairs;
  std::size_t smp_n = 10000;
  std::uint64_t smp_seed = 1;
  smp->add_option("--truth", smp_truth)->required();
  smp->add_option("--n", smp_n)->capture_default_str();
  smp->add_option("--seed", smp_seed)->capture_default_str();
  smp->add_option("--out", smp_out, "wide CSV, one column per node");
  smp->add_option("--pairs-out", smp_pairs, "long CSV: edge,x_i,x_j");

  // fit
  auto* fit = app.add_subcommand("fit", "fit a latent Ising model");
  std::string fit_data, fit_pairs, fit_topology, fit_truth, fit_encoder = "cdf", fit_out;
  std::size_t fit_nodes = 100;
  FitOptions fit_opt;
  fit->add_option("--data", fit_data, "wide CSV of complete outcomes");
  fit->add_option("--pairs", fit_pairs, "long CSV of pair observations: edge,x_i,x_j");
  fit->add_option("--topology", fit_topology, "topology spec as in gen-model");
  fit->add_option("--nodes", fit_nodes)->capture_default_str();
  fit->add_option("--truth", fit_truth, "take the topology from a truth model file");
  fit->add_option("--encoder", fit_encoder, "cdf | median-step")->capture_default_str();
  fit->add_option("--alpha", fit_opt.alpha)->capture_default_str();
  fit->add_option("--em-max-iter", fit_opt.em.max_iter)->capture_default_str();
  fit->add_option("--em-tol", fit_opt.em.tol)->capture_default_str();
  std::string fit_em_update = "constrained";
  fit->add_option("--em-update", fit_em_update, "constrained | mean-posterior")->capture_default_str();
  fit->add_option("--out", fit_out)->required();

  // calibrate-alpha
  auto* cal = app.add_subcommand("calibrate-alpha", "pick alpha below the BP transition");
  std::string cal_model, cal_out;
  AlphaSearchConfig cal_cfg;
  cal->add_option("--model", cal_model)->required();
  cal->add_option("--tau", cal_cfg.tau)->capture_default_str();
  cal->add_option("--precision", cal_cfg.precision)->capture_default_str();
  cal->add_option("--out", cal_out, "defaults to overwriting --model");

  // predict
  auto* prd = app.add_subcommand("predict", "predict unobserved nodes with mirror BP");
  std::string prd_model, prd_obs, prd_decoder = "inverse-cdf", prd_out;
  Schedule prd_sched;
  prd->add_option("--model", prd_model)->required();
  prd->add_option("--obs", prd_obs, "CSV: node,x")->required();
  prd->add_option("--decoder", prd_decoder, "inverse-cdf | bayes-quad | bayes-median-step | bayes-mean-step")
      ->capture_default_str();
  prd->add_option("--damping", prd_sched.damping)->capture_default_str();
  prd->add_option("--max-sweeps", prd_sched.max_sweeps)->capture_default_str();
  prd->add_option("--tol", prd_sched.tol)->capture_default_str();
  prd->add_option("--out", prd_out, "defaults to stdout");

  // decimate
  auto* dec = app.add_subcommand("decimate", "run the decimation experiment");
  std::string dec_truth, dec_predictors = "inverse-cdf,bayes-quad,median-step,knn,exact,median", dec_out,
                         dec_history;
  std::vector<std::string> dec_fitted;
  std::vector<std::size_t> dec_always;
  std::size_t dec_train = 10000;
  std::uint64_t dec_train_seed = 2;
  DecimationConfig dec_cfg;
  dec->add_option("--truth", dec_truth)->required();
  dec->add_option("--fitted", dec_fitted, "latent model file; repeat for each encoder");
  dec->add_option("--predictors", dec_predictors)->capture_default_str();
  dec->add_option("--replicates", dec_cfg.replicates)->capture_default_str();
  dec->add_option("--seed", dec_cfg.seed)->capture_default_str();
  dec->add_option("--bin-width", dec_cfg.bin_width)->capture_default_str();
  dec->add_option("--knn-k", dec_cfg.knn_k)->capture_default_str();
  dec->add_option("--history", dec_history, "wide CSV for k-NN; sampled from the truth model when absent");
  dec->add_option("--train-samples", dec_train, "history size when sampled")->capture_default_str();
  dec->add_option("--train-seed", dec_train_seed)->capture_default_str();
  dec->add_option("--always-observed", dec_always, "nodes revealed first (default: from the truth file)");
  dec->add_option("--damping", dec_cfg.schedule.damping)->capture_default_str();
  dec->add_option("--max-sweeps", dec_cfg.schedule.max_sweeps)->capture_default_str();
  dec->add_option("--tol", dec_cfg.schedule.tol)->capture_default_str();
  dec->add_option("--out", dec_out)->required();

  // plotdata
  auto* plt = app.add_subcommand("plotdata", "reshape decimation results into one column per predictor");
  std::string plt_results, plt_out, plt_metric = "mean_l1";
  double plt_scale = 100.0;
  plt->add_option("--results", plt_results)->required();
  plt->add_option("--metric", plt_metric, "mean_l1 | bias | nonconverged_ratio")->capture_default_str();
  plt->add_option("--scale", plt_scale)->capture_default_str();
  plt->add_option("--out", plt_out, "defaults to stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto choice = parse_topology(gen_topology, gen_nodes);
      std::vector<Marginal> marginals(choice.topology.num_nodes(), parse_marginal(gen_marginal));
      CopulaOptions opt;
      if (!std::isnan(gen_rho)) {
        if (choice.topology.num_nodes() != 2) throw std::invalid_argument("--rho applies to the pair topology");
        opt.overrides[0] = -gen_rho;
      }
      const std::set<std::size_t> ring(choice.ring_links.begin(), choice.ring_links.end());
      for (std::size_t e = 0; e < choice.topology.num_edges(); ++e)
        if (ring.count(choice.topology.edge(e).i) || ring.count(choice.topology.edge(e).j)) opt.overrides[e] = -gen_ring;
      const auto model = generate_copula(choice.topology, std::move(marginals), gen_seed, opt);
      auto j = to_json(model);
      j["always_observed"] = choice.ring_links;
      j["seed"] = gen_seed;
      open_out(gen_out) << j.dump(1) << '\n';
    } else if (*smp) {
      if (smp_out.empty() && smp_pairs.empty()) throw std::invalid_argument("give --out and/or --pairs-out");
      const auto model = load_copula_model(smp_truth);
      const auto data = sample(model, smp_n, smp_seed);
      if (!smp_out.empty()) {
        auto os = open_out(smp_out);
        write_dataset_csv(data, os);
      }
      if (!smp_pairs.empty()) {
        auto os = open_out(smp_pairs);
        write_pairs(data, model.topology(), os);
      }
    } else if (*fit) {
      fit_opt.encoder = parse_encoder_kind(fit_encoder);
      fit_opt.em.update = parse_em_update(fit_em_update);
      GraphTopology topo;
      if (!fit_truth.empty())
        topo = load_copula_model(fit_truth).topology();
      else if (!fit_topology.empty())
        topo = parse_topology(fit_topology, fit_nodes).topology;
      else
        throw std::invalid_argument("give --truth or --topology");
      LatentModel model = [&] {
        if (!fit_data.empty()) {
          auto is = open_in(fit_data);
          return fit_latent_model(topo, read_dataset_csv(is), fit_opt);
        }
        if (fit_pairs.empty()) throw std::invalid_argument("give --data or --pairs");
        auto pairs = read_pairs(fit_pairs, topo.num_edges());
        // Node samples come from the lowest-id edge touching the node.
        std::vector<std::vector<double>> nodes(topo.num_nodes());
        for (std::size_t i = 0; i < topo.num_nodes(); ++i) {
          if (topo.neighbors(i).empty()) throw std::invalid_argument("node " + std::to_string(i) + " has no edges");
          std::size_t e = topo.neighbors(i).front().edge;
          for (const auto& inc : topo.neighbors(i)) e = std::min(e, inc.edge);
          for (const auto& p : pairs[e]) nodes[i].push_back(topo.edge(e).i == i ? p.xi : p.xj);
        }
        return fit_latent_model(topo, nodes, pairs, fit_opt);
      }();
      save_latent_model(model, fit_out);
    } else if (*cal) {
      const auto model = load_latent_model(cal_model);
      const auto r = calibrate(model.ising(), cal_cfg);
      std::cout << r.alpha << '\n';
      save_latent_model(model.with_alpha(r.alpha), cal_out.empty() ? cal_model : cal_out);
    } else if (*prd) {
      const auto model = load_latent_model(prd_model);
      const auto decoder = parse_decoder_kind(prd_decoder);
      const auto obs = read_observations(prd_obs);
      const auto run = mbp_run(model.ising(), impose_observations(model, obs), prd_sched);
      const LatentPredictor predictor(model, decoder);
      const auto pred = predictor.predict(run.state);
      std::ofstream file;
      if (!prd_out.empty()) file = open_out(prd_out);
      std::ostream& os = prd_out.empty() ? std::cout : file;
      os << std::setprecision(std::numeric_limits<double>::max_digits10);
      os << "node,belief,prediction,converged,sweeps\n";
      for (const auto& [i, x] : pred)
        os << i << ',' << run.state.belief1(i) << ',' << x << ',' << (run.report.converged ? 1 : 0) << ','
           << run.report.sweeps << '\n';
      if (!run.report.converged)
        std::cerr << "warning: mirror BP did not converge (residual " << run.report.residual << ")\n";
    } else if (*dec) {
      const auto truth_json = read_json(dec_truth);
      const auto truth = copula_model_from_json(truth_json);
      std::vector<LatentModel> fitted;
      for (const auto& path : dec_fitted) fitted.push_back(load_latent_model(path));
      const auto predictors = parse_predictor_list(dec_predictors);
      if (!dec_always.empty())
        dec_cfg.always_observed.insert(dec_always.begin(), dec_always.end());
      else if (truth_json.contains("always_observed"))
        for (auto i : truth_json.at("always_observed").get<std::vector<std::size_t>>())
          dec_cfg.always_observed.insert(i);
      Dataset history;
      const bool need_history = std::count(predictors.begin(), predictors.end(), PredictorKind::Knn) > 0;
      if (need_history) {
        if (!dec_history.empty()) {
          auto is = open_in(dec_history);
          history = read_dataset_csv(is);
        } else {
          history = sample(truth, dec_train, dec_train_seed);
        }
      }
      const auto result = decimate(truth, fitted, predictors, dec_cfg, need_history ? &history : nullptr);
      auto os = open_out(dec_out);
      write_results_csv(result, os);
      std::cerr << "mirror BP runs: " << result.mbp_runs << ", not converged: " << result.mbp_nonconverged
                << ", max sweeps: " << result.max_sweeps_seen << '\n';
    } else if (*plt) {
      auto is = open_in(plt_results);
      const auto rows = read_results_csv(is);
      std::ofstream file;
      if (!plt_out.empty()) file = open_out(plt_out);
      write_plotdata(rows, plt_out.empty() ? std::cout : file, plt_metric, plt_scale);
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
