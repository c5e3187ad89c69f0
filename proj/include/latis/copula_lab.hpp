#pragma once

// Synthetic ground truth: Gaussian copulas whose precision matrix follows the
// dependency graph, with beta or empirical marginals, plus the reference
// predictors (exact conditional median, k nearest neighbours, marginal median).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "latis/dataset.hpp"
#include "latis/ecdf.hpp"
#include "latis/graph.hpp"
#include "latis/special_functions.hpp"

namespace latis {

/// Marginal law of one observed variable: beta(a, b) or an empirical sample.
class Marginal {
public:
  struct Beta {
    double a, b, log_beta;
  };

  static Marginal beta(double a, double b) {
    if (!(a > 0 && b > 0)) throw std::invalid_argument("beta parameters must be positive");
    return Marginal(Beta{a, b, special::log_beta(a, b)});
  }
  static Marginal empirical(std::span<const double> samples) { return Marginal(make_cdf(samples)); }

  double cdf(double x) const {
    if (const auto* p = std::get_if<Beta>(&law_)) return special::beta_cdf(x, p->a, p->b, p->log_beta);
    return std::get<CdfPtr>(law_)->eval(x);
  }
  double quantile(double u) const {
    if (const auto* p = std::get_if<Beta>(&law_)) return beta_quantile(*p, u);
    return std::get<CdfPtr>(law_)->quantile(u);
  }
  double median() const { return quantile(0.5); }

  bool is_beta() const { return std::holds_alternative<Beta>(law_); }
  const Beta& beta_params() const { return std::get<Beta>(law_); }
  const EmpiricalCdf& empirical_cdf() const { return *std::get<CdfPtr>(law_); }

private:
  explicit Marginal(std::variant<Beta, CdfPtr> law) : law_(std::move(law)) {}

  static double beta_quantile(const Beta& p, double u) {
    if (!(u >= 0.0 && u <= 1.0)) throw std::invalid_argument("invalid probability");
    if (u == 0.0) return 0.0;
    if (u == 1.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      (special::beta_cdf(mid, p.a, p.b, p.log_beta) < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  std::variant<Beta, CdfPtr> law_;
};

struct CopulaOptions {
  double corr_low = 0.2;   ///< |entry| drawn uniformly in [corr_low, corr_high]
  double corr_high = 1.0;
  double shrink = 0.95;    ///< PD repair factor on the largest entry
  /// Fixed precision entries for given edge ids, applied before the repair.
  std::map<std::size_t, double> overrides;
};

class CopulaModel {
public:
  CopulaModel(GraphTopology topology, Eigen::MatrixXd precision, std::vector<Marginal> marginals)
      : topology_(std::move(topology)), precision_(std::move(precision)), marginals_(std::move(marginals)) {
    const auto n = static_cast<Eigen::Index>(topology_.num_nodes());
    if (precision_.rows() != n || precision_.cols() != n)
      throw std::invalid_argument("precision matrix does not match the topology");
    if (marginals_.size() != topology_.num_nodes()) throw std::invalid_argument("one marginal per node required");
    if (n == 0) throw std::invalid_argument("empty model");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(precision_, Eigen::EigenvaluesOnly);
    if (!(eig.eigenvalues().minCoeff() > 0.0)) throw std::invalid_argument("precision matrix is not positive definite");
    const Eigen::MatrixXd cov = precision_.inverse();
    const Eigen::VectorXd scale = cov.diagonal().cwiseSqrt().cwiseInverse();
    correlation_ = scale.asDiagonal() * cov * scale.asDiagonal();
    correlation_ = 0.5 * (correlation_ + correlation_.transpose());
    correlation_.diagonal().setOnes();
    chol_ = correlation_.llt().matrixL();
  }

  const GraphTopology& topology() const { return topology_; }
  std::size_t num_nodes() const { return topology_.num_nodes(); }
  const Eigen::MatrixXd& precision() const { return precision_; }
  /// Covariance of the latent Gaussian vector, rescaled to unit variances.
  const Eigen::MatrixXd& correlation() const { return correlation_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  const Marginal& marginal(std::size_t i) const { return marginals_.at(i); }
  const std::vector<Marginal>& marginals() const { return marginals_; }

private:
  GraphTopology topology_;
  Eigen::MatrixXd precision_;
  Eigen::MatrixXd correlation_;
  Eigen::MatrixXd chol_;
  std::vector<Marginal> marginals_;
};

namespace detail {

inline bool positive_definite(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() > 1e-10;
}

// Entries after `steps` rounds of "multiply the largest |entry| by factor"
// (ties broken by lowest edge id).
inline std::vector<double> shrink_largest(std::vector<double> values, std::size_t steps, double factor) {
  using Item = std::pair<double, std::size_t>;
  auto cmp = [](const Item& x, const Item& y) { return x.first < y.first || (x.first == y.first && x.second > y.second); };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> heap(cmp);
  for (std::size_t e = 0; e < values.size(); ++e) heap.emplace(std::abs(values[e]), e);
  for (std::size_t s = 0; s < steps && !heap.empty(); ++s) {
    const auto e = heap.top().second;
    heap.pop();
    values[e] *= factor;
    heap.emplace(std::abs(values[e]), e);
  }
  return values;
}

inline Eigen::MatrixXd precision_from(const GraphTopology& topo, const std::vector<double>& values) {
  const auto n = static_cast<Eigen::Index>(topo.num_nodes());
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t e = 0; e < values.size(); ++e) {
    const auto& edge = topo.edge(e);
    p(edge.i, edge.j) = p(edge.j, edge.i) = values[e];
  }
  return p;
}

}  // namespace detail

/// Random precision entries on the edges (unit diagonal), then repeated
/// shrinking of the largest entry until the matrix is positive definite.
///
/// The shrink sequence is deterministic, so the first positive definite
/// point is located by galloping then bisecting over the step count.
inline CopulaModel generate_copula(const GraphTopology& topology, std::vector<Marginal> marginals,
                                   std::uint64_t seed, const CopulaOptions& opt = {}) {
  if (!(opt.corr_low >= 0.0 && opt.corr_low <= opt.corr_high)) throw std::invalid_argument("invalid correlation range");
  if (!(opt.shrink > 0.0 && opt.shrink < 1.0)) throw std::invalid_argument("shrink factor must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(opt.corr_low, opt.corr_high);
  std::bernoulli_distribution negative(0.5);
  std::vector<double> values(topology.num_edges());
  for (std::size_t e = 0; e < values.size(); ++e) {
    const double m = magnitude(rng);
    values[e] = negative(rng) ? -m : m;
  }
  for (const auto& [e, v] : opt.overrides) {
    if (e >= values.size()) throw std::invalid_argument("override for unknown edge " + std::to_string(e));
    values[e] = v;
  }

  auto pd_after = [&](std::size_t steps) {
    return detail::positive_definite(detail::precision_from(topology, detail::shrink_largest(values, steps, opt.shrink)));
  };
  if (!pd_after(0)) {
    // Once every |entry| is below 1 / (max degree + 1) the matrix is strictly
    // diagonally dominant, which bounds the number of useful steps.
    std::size_t max_degree = 1;
    for (std::size_t i = 0; i < topology.num_nodes(); ++i) max_degree = std::max(max_degree, topology.degree(i));
    const double target = 1.0 / static_cast<double>(max_degree + 1);
    std::size_t bound = 0;
    for (double v : values)
      if (std::abs(v) > target)
        bound += static_cast<std::size_t>(std::ceil(std::log(target / std::abs(v)) / std::log(opt.shrink))) + 1;
    std::size_t bad = 0, good = 1;
    while (good < bound && !pd_after(good)) {
      bad = good;
      good *= 2;
    }
    good = std::min(good, bound);
    if (!pd_after(good)) throw std::runtime_error("positive definite repair failed");
    while (good - bad > 1) {
      const std::size_t mid = bad + (good - bad) / 2;
      (pd_after(mid) ? good : bad) = mid;
    }
    values = detail::shrink_largest(values, good, opt.shrink);
  }
  return CopulaModel(topology, detail::precision_from(topology, values), std::move(marginals));
}

/// Draws Y ~ N(0, correlation) and maps X_i = F_i^{-1}(Phi(Y_i)).
inline Dataset sample(const CopulaModel& model, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample count must be positive");
  const std::size_t d = model.num_nodes();
  Dataset out(n, d, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < n; ++r) {
    for (auto& v : z) v = normal(rng);
    const Eigen::VectorXd y = model.cholesky().triangularView<Eigen::Lower>() * z;
    for (std::size_t c = 0; c < d; ++c)
      out.at(r, c) = model.marginal(c).quantile(special::normal_cdf(y(static_cast<Eigen::Index>(c))));
  }
  return out;
}

using NodeValues = std::map<std::size_t, double>;

/// Conditional median of each target given the observations: observations are
/// mapped to Gaussian space, the Gaussian conditional mean is taken, and the
/// result is mapped back through the target marginal.
inline NodeValues exact_predictor(const CopulaModel& model, const NodeValues& observed,
                                  const std::vector<std::size_t>& targets) {
  NodeValues out;
  std::vector<std::size_t> free_targets;
  for (auto t : targets) {
    if (t >= model.num_nodes()) throw std::invalid_argument("unknown target node");
    if (auto it = observed.find(t); it != observed.end())
      out[t] = it->second;
    else
      free_targets.push_back(t);
  }
  if (free_targets.empty()) return out;
  if (observed.empty()) {
    for (auto t : free_targets) out[t] = model.marginal(t).median();
    return out;
  }
  constexpr double kEdge = 1e-12;
  const auto& c = model.correlation();
  const auto no = static_cast<Eigen::Index>(observed.size());
  Eigen::MatrixXd coo(no, no);
  Eigen::VectorXd yo(no);
  std::vector<Eigen::Index> idx;
  for (const auto& [i, x] : observed) {
    if (i >= model.num_nodes()) throw std::invalid_argument("observation for unknown node");
    const double u = std::clamp(model.marginal(i).cdf(x), kEdge, 1.0 - kEdge);
    yo(static_cast<Eigen::Index>(idx.size())) = special::normal_quantile(u);
    idx.push_back(static_cast<Eigen::Index>(i));
  }
  for (Eigen::Index a = 0; a < no; ++a)
    for (Eigen::Index b = 0; b < no; ++b) coo(a, b) = c(idx[a], idx[b]);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(coo);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 1e-14))
    throw std::runtime_error("singular observed covariance block");
  const Eigen::VectorXd w = ldlt.solve(yo);
  for (auto t : free_targets) {
    double mean = 0.0;
    for (Eigen::Index a = 0; a < no; ++a) mean += c(static_cast<Eigen::Index>(t), idx[a]) * w(a);
    out[t] = model.marginal(t).quantile(special::normal_cdf(mean));
  }
  return out;
}

/// Mean of each target over the k history rows closest (Euclidean, observed
/// coordinates only) to the observations.
inline NodeValues knn_predictor(const Dataset& history, const NodeValues& observed,
                                const std::vector<std::size_t>& targets, std::size_t k = 50) {
  if (k == 0 || k > history.rows) throw std::invalid_argument("k exceeds the history size");
  std::vector<std::pair<double, std::size_t>> dist(history.rows);
  for (std::size_t r = 0; r < history.rows; ++r) {
    const double* row = history.row(r);
    double d2 = 0.0;
    for (const auto& [i, x] : observed) {
      const double diff = row[i] - x;
      d2 += diff * diff;
    }
    dist[r] = {d2, r};
  }
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k - 1), dist.end());
  NodeValues out;
  for (auto t : targets) {
    if (t >= history.cols) throw std::invalid_argument("unknown target node");
    double sum = 0.0;
    for (std::size_t m = 0; m < k; ++m) sum += history.at(dist[m].second, t);
    out[t] = sum / static_cast<double>(k);
  }
  return out;
}

inline NodeValues median_predictor(const std::vector<Marginal>& marginals, const std::vector<std::size_t>& targets) {
  NodeValues out;
  for (auto t : targets) out[t] = marginals.at(t).median();
  return out;
}

inline NodeValues median_predictor(const CopulaModel& model, const std::vector<std::size_t>& targets) {
  return median_predictor(model.marginals(), targets);
}

// ---- model file -----------------------------------------------------------

inline Marginal parse_marginal(const std::string& spec) {
  // beta:a,b
  if (spec.rfind("beta:", 0) == 0) {
    const auto body = spec.substr(5);
    const auto comma = body.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("expected beta:a,b");
    return Marginal::beta(std::stod(body.substr(0, comma)), std::stod(body.substr(comma + 1)));
  }
  throw std::invalid_argument("unknown marginal: " + spec);
}

inline nlohmann::json to_json(const CopulaModel& m) {
  nlohmann::json edges = nlohmann::json::array();
  for (std::size_t e = 0; e < m.topology().num_edges(); ++e) {
    const auto& edge = m.topology().edge(e);
    edges.push_back({{"i", edge.i}, {"j", edge.j}, {"precision", m.precision()(edge.i, edge.j)}});
  }
  nlohmann::json marginals = nlohmann::json::array();
  for (const auto& mg : m.marginals()) {
    if (mg.is_beta())
      marginals.push_back({{"type", "beta"}, {"a", mg.beta_params().a}, {"b", mg.beta_params().b}});
    else {
      const auto s = mg.empirical_cdf().sorted_samples();
      marginals.push_back({{"type", "empirical"}, {"samples", std::vector<double>(s.begin(), s.end())}});
    }
  }
  return {{"kind", "gaussian-copula"}, {"nodes", m.num_nodes()}, {"edges", edges}, {"marginals", marginals}};
}

inline CopulaModel copula_model_from_json(const nlohmann::json& j) {
  if (j.value("kind", std::string()) != "gaussian-copula") throw std::runtime_error("not a gaussian-copula model file");
  const auto n = j.at("nodes").get<std::size_t>();
  std::vector<Edge> edges;
  std::vector<double> values;
  for (const auto& je : j.at("edges")) {
    edges.push_back({je.at("i").get<std::size_t>(), je.at("j").get<std::size_t>()});
    values.push_back(je.at("precision").get<double>());
  }
  GraphTopology topo(n, std::move(edges));
  std::vector<Marginal> marginals;
  for (const auto& jm : j.at("marginals")) {
    const auto type = jm.at("type").get<std::string>();
    if (type == "beta")
      marginals.push_back(Marginal::beta(jm.at("a").get<double>(), jm.at("b").get<double>()));
    else if (type == "empirical")
      marginals.push_back(Marginal::empirical(jm.at("samples").get<std::vector<double>>()));
    else
      throw std::runtime_error("unknown marginal type " + type);
  }
  auto precision = detail::precision_from(topo, values);
  return CopulaModel(std::move(topo), std::move(precision), std::move(marginals));
}

inline void save_copula_model(const CopulaModel& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << to_json(m).dump(1) << '\n';
}

inline CopulaModel load_copula_model(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return copula_model_from_json(nlohmann::json::parse(is));
}

}  // namespace latis
