#pragma once

// Decimation experiments: reveal a random outcome one coordinate at a time and
// score every predictor on the coordinates still hidden.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "latis/copula_lab.hpp"
#include "latis/latent_model.hpp"
#include "latis/propagation.hpp"

namespace latis {

// ---- metrics ----------------------------------------------------------------

namespace detail {
inline void require_same_keys(const NodeValues& a, const NodeValues& b) {
  if (a.size() != b.size() || !std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
        return x.first == y.first;
      }))
    throw std::invalid_argument("key mismatch");
}
}  // namespace detail

/// Mean absolute deviation between predictions and truth over the same nodes.
inline double l1_error(const NodeValues& predictions, const NodeValues& truth) {
  detail::require_same_keys(predictions, truth);
  if (predictions.empty()) return 0.0;
  double s = 0.0;
  for (auto p = predictions.begin(), t = truth.begin(); p != predictions.end(); ++p, ++t)
    s += std::abs(p->second - t->second);
  return s / static_cast<double>(predictions.size());
}

/// Mean signed difference against the optimal (exact) predictions.
inline double bias(const NodeValues& predictions, const NodeValues& optimal) {
  detail::require_same_keys(predictions, optimal);
  if (predictions.empty()) return 0.0;
  double s = 0.0;
  for (auto p = predictions.begin(), o = optimal.begin(); p != predictions.end(); ++p, ++o) s += p->second - o->second;
  return s / static_cast<double>(predictions.size());
}

// ---- predictors ---------------------------------------------------------------

enum class PredictorKind { InverseCdf, BayesQuad, MedianStep, BayesMeanStep, Knn, Exact, Median };

inline std::string_view to_string(PredictorKind k) {
  switch (k) {
    case PredictorKind::InverseCdf: return "inverse-cdf";
    case PredictorKind::BayesQuad: return "bayes-quad";
    case PredictorKind::MedianStep: return "median-step";
    case PredictorKind::BayesMeanStep: return "bayes-mean-step";
    case PredictorKind::Knn: return "knn";
    case PredictorKind::Exact: return "exact";
    case PredictorKind::Median: return "median";
  }
  return "?";
}

inline PredictorKind parse_predictor_kind(std::string_view s) {
  for (auto k : {PredictorKind::InverseCdf, PredictorKind::BayesQuad, PredictorKind::MedianStep,
                 PredictorKind::BayesMeanStep, PredictorKind::Knn, PredictorKind::Exact, PredictorKind::Median})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown predictor: " + std::string(s));
}

inline std::vector<PredictorKind> parse_predictor_list(std::string_view csv) {
  std::vector<PredictorKind> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto comma = std::min(csv.find(',', start), csv.size());
    if (comma > start) out.push_back(parse_predictor_kind(csv.substr(start, comma - start)));
    start = comma + 1;
  }
  if (out.empty()) throw std::invalid_argument("no predictors given");
  return out;
}

/// Latent-model predictors are a coding scheme; the others are baselines.
inline std::optional<CodingScheme> coding_scheme_of(PredictorKind k) {
  switch (k) {
    case PredictorKind::InverseCdf: return CodingScheme{EncoderKind::Cdf, DecoderKind::InverseCdf};
    case PredictorKind::BayesQuad: return CodingScheme{EncoderKind::Cdf, DecoderKind::BayesQuadCdf};
    case PredictorKind::MedianStep: return CodingScheme{EncoderKind::MedianStep, DecoderKind::BayesMedianStep};
    case PredictorKind::BayesMeanStep: return CodingScheme{EncoderKind::MedianStep, DecoderKind::BayesMeanStep};
    default: return std::nullopt;
  }
}

// ---- decimation ---------------------------------------------------------------

struct DecimationConfig {
  std::size_t replicates = 1000;
  std::uint64_t seed = 7;
  /// Index of the first replicate; runs over disjoint ranges can be merged.
  std::size_t first_replicate = 0;
  double bin_width = 0.05;
  std::size_t knn_k = 50;
  Schedule schedule;
  std::set<std::size_t> always_observed;  ///< revealed before the random order starts
};

struct BinStats {
  double bin_low = 0.0;
  double bin_high = 0.0;
  PredictorKind predictor = PredictorKind::Median;
  double mean_l1 = 0.0;
  double bias = 0.0;
  std::size_t n_points = 0;
  double nonconverged_ratio = 0.0;
};

struct DecimationResult {
  std::size_t replicates = 0;
  std::vector<BinStats> rows;  ///< sorted by bin, then by the requested predictor order
  std::size_t mbp_runs = 0;
  std::size_t mbp_nonconverged = 0;
  std::size_t max_sweeps_seen = 0;

  /// Row for (bin containing fraction, predictor), if that bin has points.
  std::optional<BinStats> at(double fraction, PredictorKind p) const {
    for (const auto& r : rows)
      if (r.predictor == p && fraction >= r.bin_low - 1e-12 && fraction < r.bin_high - 1e-12) return r;
    return std::nullopt;
  }
};

namespace detail {

// Running squared distances from every history row to the revealed coordinates.
class KnnState {
public:
  KnnState(const Dataset& history, std::size_t k) : h_(&history), k_(k), d2_(history.rows, 0.0), order_(history.rows) {
    if (k == 0 || k > history.rows) throw std::invalid_argument("k exceeds the history size");
  }
  void reset() { std::fill(d2_.begin(), d2_.end(), 0.0); }
  void reveal(std::size_t node, double x) {
    for (std::size_t r = 0; r < h_->rows; ++r) {
      const double diff = h_->at(r, node) - x;
      d2_[r] += diff * diff;
    }
  }
  NodeValues predict(const std::vector<std::size_t>& targets) {
    for (std::size_t r = 0; r < order_.size(); ++r) order_[r] = {d2_[r], r};
    std::nth_element(order_.begin(), order_.begin() + static_cast<std::ptrdiff_t>(k_ - 1), order_.end());
    NodeValues out;
    for (auto t : targets) {
      double s = 0.0;
      for (std::size_t m = 0; m < k_; ++m) s += h_->at(order_[m].second, t);
      out[t] = s / static_cast<double>(k_);
    }
    return out;
  }

private:
  const Dataset* h_;
  std::size_t k_;
  std::vector<double> d2_;
  std::vector<std::pair<double, std::size_t>> order_;
};

struct Accumulator {
  double l1 = 0.0, bias = 0.0;
  std::size_t points = 0, nonconverged = 0;
};

}  // namespace detail

/// Runs the decimation experiment. `fitted` holds latent models (at most one
/// per encoder kind); `history` feeds the k-NN baseline and may be null when
/// knn is not requested.
inline DecimationResult decimate(const CopulaModel& truth, const std::vector<LatentModel>& fitted,
                                 const std::vector<PredictorKind>& predictors, const DecimationConfig& config,
                                 const Dataset* history = nullptr) {
  const std::size_t n = truth.num_nodes();
  if (predictors.empty()) throw std::invalid_argument("no predictors given");
  if (config.replicates == 0) throw std::invalid_argument("replicates must be positive");
  const double inv_width = 1.0 / config.bin_width;
  const auto nbins = static_cast<std::size_t>(std::llround(inv_width));
  if (!(config.bin_width > 0.0) || std::abs(inv_width - static_cast<double>(nbins)) > 1e-9)
    throw std::invalid_argument("bin width must divide 1");
  for (auto a : config.always_observed)
    if (a >= n) throw std::invalid_argument("always-observed node out of range");
  for (const auto& m : fitted)
    if (m.num_nodes() != n || m.topology().edges() != truth.topology().edges())
      throw std::invalid_argument("fitted model topology differs from the truth model");

  // One mBP run per encoder kind per step, shared by its decoders.
  std::map<EncoderKind, const LatentModel*> by_encoder;
  for (const auto& m : fitted) {
    const auto kind = m.encoder_kind();
    if (by_encoder.count(kind)) throw std::invalid_argument("two fitted models share an encoder kind");
    by_encoder[kind] = &m;
  }
  std::map<EncoderKind, FactorGraph> graphs;
  std::map<PredictorKind, LatentPredictor> latent;
  std::set<EncoderKind> needed;
  for (auto p : predictors) {
    if (const auto scheme = coding_scheme_of(p)) {
      const auto it = by_encoder.find(scheme->encoder);
      if (it == by_encoder.end())
        throw std::invalid_argument("predictor " + std::string(to_string(p)) + " needs a fitted model with encoder " +
                                    std::string(to_string(scheme->encoder)));
      latent.emplace(p, LatentPredictor(*it->second, scheme->decoder));
      needed.insert(scheme->encoder);
      if (!graphs.count(scheme->encoder)) graphs.emplace(scheme->encoder, FactorGraph::from_model(it->second->ising()));
    }
  }
  std::optional<detail::KnnState> knn;
  if (std::count(predictors.begin(), predictors.end(), PredictorKind::Knn)) {
    if (!history) throw std::invalid_argument("knn needs a history dataset");
    if (history->cols != n) throw std::invalid_argument("history width does not match the truth model");
    knn.emplace(*history, config.knn_k);
  }

  std::vector<double> medians(n);
  for (std::size_t i = 0; i < n; ++i) medians[i] = truth.marginal(i).median();

  std::vector<std::vector<detail::Accumulator>> acc(nbins, std::vector<detail::Accumulator>(predictors.size()));
  DecimationResult result;
  result.replicates = config.replicates;

  std::vector<std::size_t> free_nodes;
  for (std::size_t i = 0; i < n; ++i)
    if (!config.always_observed.count(i)) free_nodes.push_back(i);

  for (std::size_t rep = config.first_replicate; rep < config.first_replicate + config.replicates; ++rep) {
    std::seed_seq seq{config.seed, static_cast<std::uint64_t>(rep)};
    std::mt19937_64 rng(seq);
    const Dataset outcome = sample(truth, 1, rng());
    std::vector<std::size_t> order(config.always_observed.begin(), config.always_observed.end());
    std::shuffle(order.begin(), order.end(), rng);
    auto rest = free_nodes;
    std::shuffle(rest.begin(), rest.end(), rng);
    order.insert(order.end(), rest.begin(), rest.end());

    NodeValues observed;
    if (knn) knn->reset();
    for (std::size_t r = 0; r < n; ++r) {
      if (r > 0) {
        const auto node = order[r - 1];
        observed[node] = outcome.at(0, node);
        if (knn) knn->reveal(node, observed[node]);
      }
      if (r < config.always_observed.size()) continue;
      std::vector<std::size_t> targets(order.begin() + static_cast<std::ptrdiff_t>(r), order.end());
      std::sort(targets.begin(), targets.end());
      NodeValues truth_values;
      for (auto t : targets) truth_values[t] = outcome.at(0, t);
      const NodeValues exact = exact_predictor(truth, observed, targets);

      std::map<EncoderKind, PropagationResult> runs;
      for (auto enc : needed) {
        const auto& model = *by_encoder.at(enc);
        auto run = mbp_run(graphs.at(enc), impose_observations(model, observed), config.schedule);
        ++result.mbp_runs;
        if (!run.report.converged) ++result.mbp_nonconverged;
        result.max_sweeps_seen = std::max(result.max_sweeps_seen, run.report.sweeps);
        runs.emplace(enc, std::move(run));
      }

      const std::size_t bin = std::min(r * nbins / n, nbins - 1);
      for (std::size_t p = 0; p < predictors.size(); ++p) {
        NodeValues pred;
        bool converged = true;
        switch (predictors[p]) {
          case PredictorKind::Exact: pred = exact; break;
          case PredictorKind::Median:
            for (auto t : targets) pred[t] = medians[t];
            break;
          case PredictorKind::Knn: pred = knn->predict(targets); break;
          default: {
            const auto& run = runs.at(coding_scheme_of(predictors[p])->encoder);
            converged = run.report.converged;
            const auto& lp = latent.at(predictors[p]);
            for (auto t : targets) pred[t] = lp.decode(t, std::clamp(run.state.belief1(t), 0.0, 1.0));
          }
        }
        auto& a = acc[bin][p];
        a.l1 += l1_error(pred, truth_values);
        a.bias += bias(pred, exact);
        ++a.points;
        if (!converged) ++a.nonconverged;
      }
    }
  }

  for (std::size_t b = 0; b < nbins; ++b)
    for (std::size_t p = 0; p < predictors.size(); ++p) {
      const auto& a = acc[b][p];
      if (a.points == 0) continue;
      const auto np = static_cast<double>(a.points);
      result.rows.push_back({static_cast<double>(b) / static_cast<double>(nbins),
                             static_cast<double>(b + 1) / static_cast<double>(nbins), predictors[p], a.l1 / np,
                             a.bias / np, a.points, static_cast<double>(a.nonconverged) / np});
    }
  return result;
}

/// Pools two runs over disjoint replicate ranges, weighting bins by their point counts.
inline DecimationResult merge_results(const DecimationResult& a, const DecimationResult& b) {
  DecimationResult out;
  out.replicates = a.replicates + b.replicates;
  out.mbp_runs = a.mbp_runs + b.mbp_runs;
  out.mbp_nonconverged = a.mbp_nonconverged + b.mbp_nonconverged;
  out.max_sweeps_seen = std::max(a.max_sweeps_seen, b.max_sweeps_seen);
  out.rows = a.rows;
  for (const auto& r : b.rows) {
    auto it = std::find_if(out.rows.begin(), out.rows.end(), [&](const BinStats& x) {
      return x.predictor == r.predictor && std::abs(x.bin_low - r.bin_low) < 1e-12;
    });
    if (it == out.rows.end()) {
      out.rows.push_back(r);
      continue;
    }
    const auto na = static_cast<double>(it->n_points), nb = static_cast<double>(r.n_points);
    it->mean_l1 = (it->mean_l1 * na + r.mean_l1 * nb) / (na + nb);
    it->bias = (it->bias * na + r.bias * nb) / (na + nb);
    it->nonconverged_ratio = (it->nonconverged_ratio * na + r.nonconverged_ratio * nb) / (na + nb);
    it->n_points += r.n_points;
  }
  std::stable_sort(out.rows.begin(), out.rows.end(),
                   [](const BinStats& x, const BinStats& y) { return x.bin_low < y.bin_low - 1e-12; });
  return out;
}

// ---- results files ----------------------------------------------------------------

inline void write_results_csv(const DecimationResult& r, std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "bin_low,bin_high,predictor,mean_l1,bias,n_points,nonconverged_ratio\n";
  for (const auto& row : r.rows)
    os << row.bin_low << ',' << row.bin_high << ',' << to_string(row.predictor) << ',' << row.mean_l1 << ','
       << row.bias << ',' << row.n_points << ',' << row.nonconverged_ratio << '\n';
}

inline std::vector<BinStats> read_results_csv(std::istream& is) {
  std::vector<BinStats> rows;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("empty results file");
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<std::string> cells;
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error("malformed results row: " + line);
    rows.push_back({std::stod(cells[0]), std::stod(cells[1]), parse_predictor_kind(cells[2]), std::stod(cells[3]),
                    std::stod(cells[4]), static_cast<std::size_t>(std::stoull(cells[5])), std::stod(cells[6])});
  }
  return rows;
}

/// Wide table for plotting: one row per bin (centre), one column per predictor.
inline void write_plotdata(const std::vector<BinStats>& rows, std::ostream& os, std::string_view metric = "mean_l1",
                           double scale = 100.0) {
  if (metric != "mean_l1" && metric != "bias" && metric != "nonconverged_ratio")
    throw std::invalid_argument("unknown metric: " + std::string(metric));
  std::vector<PredictorKind> columns;
  std::map<double, std::map<PredictorKind, double>> table;
  for (const auto& r : rows) {
    if (std::find(columns.begin(), columns.end(), r.predictor) == columns.end()) columns.push_back(r.predictor);
    const double v = metric == "mean_l1" ? r.mean_l1 : metric == "bias" ? r.bias : r.nonconverged_ratio;
    table[0.5 * (r.bin_low + r.bin_high)][r.predictor] = v * scale;
  }
  os << std::setprecision(10) << "fraction";
  for (auto c : columns) os << ',' << to_string(c);
  os << '\n';
  for (const auto& [x, values] : table) {
    os << x;
    for (auto c : columns) {
      os << ',';
      if (auto it = values.find(c); it != values.end()) os << it->second;
    }
    os << '\n';
  }
}

}  // namespace latis
