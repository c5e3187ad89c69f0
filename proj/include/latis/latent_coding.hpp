#pragma once

// Encoding of real observations into the parameter of a latent Bernoulli
// variable, and decoding of a belief b = P(sigma = 1) back into a prediction.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "latis/ecdf.hpp"

namespace latis {

enum class EncoderKind {
  Cdf,         ///< max-entropy choice, Lambda = F
  MedianStep,  ///< max mutual information choice, Lambda = 1{x >= median}
};

enum class DecoderKind {
  InverseCdf,       ///< F^{-1}(b)
  BayesMedianStep,  ///< median of the Jeffrey-updated law, median-step encoder
  BayesQuadCdf,     ///< median of the Jeffrey-updated law, cdf encoder
  BayesMeanStep,    ///< mean of the Jeffrey-updated law
};

inline std::string_view to_string(EncoderKind k) {
  switch (k) {
    case EncoderKind::Cdf: return "cdf";
    case EncoderKind::MedianStep: return "median-step";
  }
  return "?";
}

inline std::string_view to_string(DecoderKind k) {
  switch (k) {
    case DecoderKind::InverseCdf: return "inverse-cdf";
    case DecoderKind::BayesMedianStep: return "bayes-median-step";
    case DecoderKind::BayesQuadCdf: return "bayes-quad";
    case DecoderKind::BayesMeanStep: return "bayes-mean-step";
  }
  return "?";
}

inline EncoderKind parse_encoder_kind(std::string_view s) {
  if (s == "cdf") return EncoderKind::Cdf;
  if (s == "median-step") return EncoderKind::MedianStep;
  throw std::invalid_argument("unknown encoder kind: " + std::string(s));
}

inline DecoderKind parse_decoder_kind(std::string_view s) {
  if (s == "inverse-cdf") return DecoderKind::InverseCdf;
  if (s == "bayes-median-step") return DecoderKind::BayesMedianStep;
  if (s == "bayes-quad") return DecoderKind::BayesQuadCdf;
  if (s == "bayes-mean-step") return DecoderKind::BayesMeanStep;
  throw std::invalid_argument("unknown decoder kind: " + std::string(s));
}

/// An encoding function Lambda attached to one node, with its marginal p1.
class Encoder {
public:
  Encoder(EncoderKind kind, CdfPtr cdf) : kind_(kind), cdf_(std::move(cdf)) {
    if (!cdf_) throw std::invalid_argument("encoder needs a cdf");
    threshold_ = cdf_->median();
    p1_ = mean_encoding(cdf_->sorted_samples());
  }

  double encode(double x) const {
    if (!std::isfinite(x)) throw std::invalid_argument("invalid observation");
    switch (kind_) {
      case EncoderKind::Cdf: return cdf_->eval(x);
      case EncoderKind::MedianStep: return x >= threshold_ ? 1.0 : 0.0;
    }
    return 0.0;
  }
  double operator()(double x) const { return encode(x); }

  EncoderKind kind() const { return kind_; }
  double p1() const { return p1_; }
  /// Median used by the step encoder.
  double threshold() const { return threshold_; }
  const EmpiricalCdf& cdf() const { return *cdf_; }
  const CdfPtr& cdf_ptr() const { return cdf_; }

  /// Mean of encode over samples; throws when the latent variable is constant.
  double mean_encoding(std::span<const double> samples) const {
    if (samples.empty()) throw std::invalid_argument("no samples");
    double sum = 0.0;
    for (double x : samples) sum += encode(x);
    const double p = sum / static_cast<double>(samples.size());
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("degenerate latent variable");
    return p;
  }

private:
  EncoderKind kind_;
  CdfPtr cdf_;
  double threshold_ = 0.0;
  double p1_ = 0.5;
};

/// p1 = E[Lambda(X)] estimated over the given training samples.
inline double marginal_p1(const Encoder& e, std::span<const double> training_samples) {
  return e.mean_encoding(training_samples);
}

/// Step cdfs of (X | sigma = 1) and (X | sigma = 0) over the encoder's samples.
///
/// dF1 = Lambda dF / p1 and dF0 = (1 - Lambda) dF / (1 - p1), both restricted
/// to the sample atoms, so p1 F1 + (1 - p1) F0 = F holds at every point.
class ConditionalCdfs {
public:
  explicit ConditionalCdfs(const Encoder& e) : cdf_(e.cdf_ptr()) {
    const auto s = cdf_->sorted_samples();
    cum_.assign(s.size() + 1, 0.0);
    double mean1 = 0.0, mean0 = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double w = e.encode(s[k]);
      cum_[k + 1] = cum_[k] + w;
      mean1 += w * s[k];
      mean0 += (1.0 - w) * s[k];
    }
    const double n = static_cast<double>(s.size());
    total1_ = cum_.back();
    total0_ = n - total1_;
    if (!(total1_ > 0.0 && total0_ > 0.0))
      throw std::domain_error("degenerate latent variable");
    p1_ = total1_ / n;
    mean1_ = mean1 / total1_;
    mean0_ = mean0 / total0_;
  }

  double f1(double x) const { return cum_[cdf_->count_le(x)] / total1_; }
  double f0(double x) const {
    const std::size_t c = cdf_->count_le(x);
    return (static_cast<double>(c) - cum_[c]) / total0_;
  }
  double f(double x) const { return cdf_->eval(x); }

  double p1() const { return p1_; }
  double mean1() const { return mean1_; }
  double mean0() const { return mean0_; }
  const EmpiricalCdf& cdf() const { return *cdf_; }

private:
  CdfPtr cdf_;
  std::vector<double> cum_;  // cum_[c] = sum of Lambda over the c smallest samples
  double total1_ = 0.0, total0_ = 0.0;
  double p1_ = 0.5, mean1_ = 0.0, mean0_ = 0.0;
};

inline ConditionalCdfs conditional_cdfs(const Encoder& e) { return ConditionalCdfs(e); }

/// Jeffrey-updated cdf F^B = b F1 + (1 - b) F0.
class JeffreyCdf {
public:
  JeffreyCdf(const ConditionalCdfs& c, double b) : c_(&c), b_(b) {
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("invalid probability");
  }
  double operator()(double x) const { return b_ * c_->f1(x) + (1.0 - b_) * c_->f0(x); }

private:
  const ConditionalCdfs* c_;
  double b_;
};

inline JeffreyCdf jeffrey_update(const ConditionalCdfs& c, double b) { return JeffreyCdf(c, b); }

/// Quantile level solving F^B(x) = 1/2 for the median-step encoder.
inline double bayes_median_step_level(double b) {
  return b <= 0.5 ? 1.0 / (4.0 * (1.0 - b)) : (4.0 * b - 1.0) / (4.0 * b);
}

/// Reachable root t of ((2b - 1) t - 2(b - 1)) t = 1/2.
///
/// Written as (1 + c / (sqrt(c^2 + 1) + 1)) / 2 with c = 2b - 1, which is the
/// textbook root with the removable singularity at b = 1/2 cancelled.
inline double bayes_quad_level(double b) {
  const double c = 2.0 * b - 1.0;
  return 0.5 * (1.0 + c / (std::sqrt(c * c + 1.0) + 1.0));
}

/// Maps a belief b = P(sigma = 1) back to a real prediction.
class Decoder {
public:
  Decoder(DecoderKind kind, const Encoder& e) : kind_(kind), cdf_(e.cdf_ptr()) {
    const bool cdf_encoded = e.kind() == EncoderKind::Cdf;
    if ((kind == DecoderKind::InverseCdf || kind == DecoderKind::BayesQuadCdf) && !cdf_encoded)
      throw std::invalid_argument(std::string(to_string(kind)) + " requires the cdf encoder");
    if (kind == DecoderKind::BayesMedianStep && cdf_encoded)
      throw std::invalid_argument("bayes-median-step requires the median-step encoder");
    if (kind == DecoderKind::BayesMeanStep) {
      const ConditionalCdfs c(e);
      mean1_ = c.mean1();
      mean0_ = c.mean0();
    }
  }

  double decode(double b) const {
    if (!(b >= 0.0 && b <= 1.0)) throw std::invalid_argument("invalid probability");
    switch (kind_) {
      case DecoderKind::InverseCdf: return cdf_->quantile(b);
      case DecoderKind::BayesMedianStep: return cdf_->quantile(clamp01(bayes_median_step_level(b)));
      case DecoderKind::BayesQuadCdf: return cdf_->quantile(clamp01(bayes_quad_level(b)));
      case DecoderKind::BayesMeanStep: return b * mean1_ + (1.0 - b) * mean0_;
    }
    return 0.0;
  }
  double operator()(double b) const { return decode(b); }

  DecoderKind kind() const { return kind_; }

private:
  static double clamp01(double v) { return v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v); }

  DecoderKind kind_;
  CdfPtr cdf_;
  double mean1_ = 0.0, mean0_ = 0.0;
};

/// A named (encoder, decoder) pairing as compared in the decimation runs.
struct CodingScheme {
  EncoderKind encoder;
  DecoderKind decoder;
};

inline CodingScheme parse_coding_scheme(std::string_view s) {
  if (s == "inverse-cdf") return {EncoderKind::Cdf, DecoderKind::InverseCdf};
  if (s == "bayes-quad") return {EncoderKind::Cdf, DecoderKind::BayesQuadCdf};
  if (s == "median-step") return {EncoderKind::MedianStep, DecoderKind::BayesMedianStep};
  if (s == "bayes-mean-step") return {EncoderKind::MedianStep, DecoderKind::BayesMeanStep};
  throw std::invalid_argument("unknown coding scheme: " + std::string(s));
}

}  // namespace latis
