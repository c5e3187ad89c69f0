#pragma once

// EM estimation of the joint law of two latent binary variables from paired
// real-valued observations. Node marginals are fixed by the encoders; only
// p11 = P(sigma_i = 1, sigma_j = 1) is estimated.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "latis/latent_coding.hpp"

namespace latis {

/// Joint law of (sigma_i, sigma_j) parametrized by (p_i1, p_j1, p11).
struct PairwiseMarginal {
  double p_i1 = 0.5;
  double p_j1 = 0.5;
  double p11 = 0.25;
  std::size_t n_samples = 0;

  /// Lower Frechet bound of the validity domain D(p_i1, p_j1).
  double lower() const { return std::max(0.0, p_i1 + p_j1 - 1.0); }
  /// Upper Frechet bound of D(p_i1, p_j1).
  double upper() const { return std::min(p_i1, p_j1); }
  bool valid() const { return p11 >= lower() && p11 <= upper(); }

  /// p(s_i, s_j) from the three free parameters.
  double table(int si, int sj) const {
    if (si == 1 && sj == 1) return p11;
    if (si == 0 && sj == 1) return p_j1 - p11;
    if (si == 1 && sj == 0) return p_i1 - p11;
    return 1.0 - p_i1 - p_j1 + p11;
  }
  double p_i(int s) const { return s == 1 ? p_i1 : 1.0 - p_i1; }
  double p_j(int s) const { return s == 1 ? p_j1 : 1.0 - p_j1; }

  /// Same law seen from the other endpoint.
  PairwiseMarginal transposed() const { return {p_j1, p_i1, p11, n_samples}; }
};

struct PairSample {
  double xi;
  double xj;
};
using PairSamples = std::vector<PairSample>;

/// How the next p11 is obtained from the posteriors of the current iterate.
enum class EmUpdate {
  /// Maximizes the expected complete log-likelihood over D with the node
  /// marginals held fixed. Guarantees likelihood ascent.
  Constrained,
  /// Mean posterior of (1, 1). Ignores the fixed margins, so ascent is not
  /// guaranteed when the posterior margins drift from p_i1, p_j1.
  MeanPosterior,
};

inline std::string_view to_string(EmUpdate u) { return u == EmUpdate::Constrained ? "constrained" : "mean-posterior"; }

inline EmUpdate parse_em_update(std::string_view s) {
  if (s == "constrained") return EmUpdate::Constrained;
  if (s == "mean-posterior") return EmUpdate::MeanPosterior;
  throw std::invalid_argument("unknown EM update: " + std::string(s));
}

struct EmOptions {
  std::optional<double> init;  ///< defaults to independence, p_i1 * p_j1
  std::size_t max_iter = 500;
  double tol = 1e-9;
  double boundary_eps = 1e-9;  ///< iterates are clamped into D shrunk by this
  EmUpdate update = EmUpdate::Constrained;
};

struct EmFit {
  PairwiseMarginal marginal;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;  ///< p11 iterates, starting with the initial value
};

namespace detail {

// Pre-encoded observations: Lambda_i(x_i^k), Lambda_j(x_j^k).
struct EncodedPairs {
  std::vector<double> li, lj;
};

inline EncodedPairs encode_pairs(const PairSamples& samples, const Encoder& enc_i,
                                 const Encoder& enc_j) {
  if (samples.empty()) throw std::invalid_argument("no pair samples");
  EncodedPairs e;
  e.li.reserve(samples.size());
  e.lj.reserve(samples.size());
  for (const auto& s : samples) {
    e.li.push_back(enc_i.encode(s.xi));
    e.lj.push_back(enc_j.encode(s.xj));
  }
  return e;
}

// psi(s_i, s_j) = p(s_i, s_j) / (p_i(s_i) p_j(s_j)), indexed [s_i][s_j].
inline std::array<std::array<double, 2>, 2> ratio_table(const PairwiseMarginal& m) {
  std::array<std::array<double, 2>, 2> psi{};
  for (int si = 0; si < 2; ++si)
    for (int sj = 0; sj < 2; ++sj) psi[si][sj] = m.table(si, sj) / (m.p_i(si) * m.p_j(sj));
  return psi;
}

inline double z_weight(const std::array<std::array<double, 2>, 2>& psi, double li, double lj) {
  return psi[0][0] * (1 - li) * (1 - lj) + psi[0][1] * (1 - li) * lj +
         psi[1][0] * li * (1 - lj) + psi[1][1] * li * lj;
}

// Mean posterior probabilities of the four latent states, indexed [s_i][s_j].
inline std::array<std::array<double, 2>, 2> mean_posteriors(const EncodedPairs& e, const PairwiseMarginal& m) {
  const auto psi = ratio_table(m);
  std::array<std::array<double, 2>, 2> r{};
  for (std::size_t k = 0; k < e.li.size(); ++k) {
    const double w[2][2] = {{psi[0][0] * (1 - e.li[k]) * (1 - e.lj[k]), psi[0][1] * (1 - e.li[k]) * e.lj[k]},
                            {psi[1][0] * e.li[k] * (1 - e.lj[k]), psi[1][1] * e.li[k] * e.lj[k]}};
    const double z = w[0][0] + w[0][1] + w[1][0] + w[1][1];
    if (!(z > 0.0)) throw std::domain_error("zero likelihood for a sample");
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) r[a][b] += w[a][b] / z;
  }
  for (auto& row : r)
    for (double& v : row) v /= static_cast<double>(e.li.size());
  return r;
}

// argmax over D of sum_s r(s) log p(s) with the node marginals of m fixed.
// The objective is strictly concave in p11, so bisection on its derivative suffices.
inline double constrained_argmax(const std::array<std::array<double, 2>, 2>& r, const PairwiseMarginal& m) {
  double lo = m.lower(), hi = m.upper();
  auto slope = [&](double p) {
    PairwiseMarginal t = m;
    t.p11 = p;
    double g = 0.0;
    if (r[1][1] > 0) g += r[1][1] / t.table(1, 1);
    if (r[0][0] > 0) g += r[0][0] / t.table(0, 0);
    if (r[1][0] > 0) g -= r[1][0] / t.table(1, 0);
    if (r[0][1] > 0) g -= r[0][1] / t.table(0, 1);
    return g;
  };
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (slope(mid) > 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

inline double em_update(const EncodedPairs& e, const PairwiseMarginal& m, EmUpdate kind) {
  const auto r = mean_posteriors(e, m);
  return kind == EmUpdate::MeanPosterior ? r[1][1] : constrained_argmax(r, m);
}

inline double log_likelihood(const EncodedPairs& e, const PairwiseMarginal& m) {
  const auto psi = ratio_table(m);
  // Neumaier summation; the monotonicity checks compare sums to 1e-12.
  double sum = 0.0, comp = 0.0;
  for (std::size_t k = 0; k < e.li.size(); ++k) {
    const double z = z_weight(psi, e.li[k], e.lj[k]);
    if (!(z > 0.0)) throw std::domain_error("zero likelihood for a sample");
    const double v = std::log(z);
    const double t = sum + v;
    comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + comp;
}

}  // namespace detail

/// Clamp p11 into D(p_i1, p_j1) shrunk by eps on both sides.
inline double clamp_to_domain(const PairwiseMarginal& m, double p11, double eps) {
  const double lo = m.lower() + eps;
  const double hi = m.upper() - eps;
  if (lo > hi) return 0.5 * (m.lower() + m.upper());
  return std::clamp(p11, lo, hi);
}

/// Density-free log-likelihood sum_k log Z_ij(x_i^k, x_j^k) under m.
///
/// The unknown node densities only contribute an additive constant, so this
/// is the likelihood up to a term independent of p11.
inline double log_likelihood(const PairSamples& samples, const Encoder& enc_i,
                             const Encoder& enc_j, const PairwiseMarginal& m) {
  if (!m.valid()) throw std::invalid_argument("pairwise marginal outside its validity domain");
  return detail::log_likelihood(detail::encode_pairs(samples, enc_i, enc_j), m);
}

/// One EM step from m: the raw update (before clamping into D).
inline double em_step(const PairSamples& samples, const Encoder& enc_i, const Encoder& enc_j,
                      const PairwiseMarginal& m, EmUpdate kind = EmUpdate::Constrained) {
  return detail::em_update(detail::encode_pairs(samples, enc_i, enc_j), m, kind);
}

inline EmFit em_fit(const PairSamples& samples, const Encoder& enc_i, const Encoder& enc_j,
                    const EmOptions& opt = {}) {
  if (samples.empty()) throw std::invalid_argument("no pair samples");
  PairwiseMarginal m{enc_i.p1(), enc_j.p1(), 0.0, samples.size()};
  const double init = opt.init.value_or(m.p_i1 * m.p_j1);
  if (!(init > m.lower() && init < m.upper()))
    throw std::invalid_argument("initial p11 outside the validity domain");
  m.p11 = init;

  const auto enc = detail::encode_pairs(samples, enc_i, enc_j);
  EmFit fit;
  fit.trace.push_back(m.p11);
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    const double next = clamp_to_domain(m, detail::em_update(enc, m, opt.update), opt.boundary_eps);
    const double delta = std::abs(next - m.p11);
    m.p11 = next;
    fit.trace.push_back(next);
    fit.iterations = it + 1;
    if (delta < opt.tol) {
      fit.converged = true;
      break;
    }
  }
  fit.marginal = m;
  return fit;
}

}  // namespace latis
