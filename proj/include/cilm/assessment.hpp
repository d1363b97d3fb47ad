#pragma once

// WAIC, highest posterior density intervals and posterior predictive
// incidence curves.

#include <cstdint>
#include <span>
#include <vector>

#include "cilm/core.hpp"
#include "cilm/ilm.hpp"
#include "cilm/inference.hpp"

namespace cilm {

// Draw x unit matrix of log Bernoulli contributions, row-major.
class PointwiseLogLik {
 public:
  PointwiseLogLik(std::size_t draws, std::size_t units);
  PointwiseLogLik(std::size_t draws, std::size_t units, std::vector<double> values);

  std::size_t draws() const { return draws_; }
  std::size_t units() const { return units_; }
  double operator()(std::size_t d, std::size_t u) const { return values_[d * units_ + u]; }
  std::span<double> row(std::size_t d) { return std::span<double>(values_).subspan(d * units_, units_); }
  std::span<const double> row(std::size_t d) const {
    return std::span<const double>(values_).subspan(d * units_, units_);
  }

 private:
  std::size_t draws_;
  std::size_t units_;
  std::vector<double> values_;
};

// One row per post-burn-in draw of the trace, in iteration order.
PointwiseLogLik pointwise_loglik(const LikelihoodEvaluator& evaluator, const McmcTrace& trace);

struct WaicResult {
  double waic = 0.0;
  double lppd = 0.0;
  double p_waic = 0.0;
};

// Needs >= 2 draws; throws DomainError when a unit is -inf in every draw.
WaicResult waic(const PointwiseLogLik& pointwise);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

// Shortest window of ceil(mass * n) order statistics, lowest start on ties.
// Needs >= 20 samples.
Interval hpdi(std::span<const double> samples, double mass = 0.95);

struct CurveEnsemble {
  Day from = 0;  // first day covered; band index k is day from + k
  std::vector<std::vector<int>> curves;  // simulation x day
  std::vector<double> lower;
  std::vector<double> median;
  std::vector<double> upper;

  std::size_t days() const { return lower.size(); }
  // Fraction of covered days whose value lies within [lower, upper].
  double coverage(std::span<const int> truth_from_day0) const;
};

struct PpdConfig {
  int n_sims = 100;
  std::uint64_t seed = 1;
  int infectious_period = 3;
  int latent_period = 0;
  double mass = 0.95;
};

// Parameter draws are taken evenly from the post-burn-in trace; each member
// re-simulates from the record's initial infectives. Member m uses the
// stream derive_seed(seed, m).
CurveEnsemble ppd_complete(const McmcTrace& trace, const EpidemicRecord& record, const Population& pop,
                           const ModelSpec& spec, const ClusterAssignment* clusters, const PpdConfig& config);

// Each member starts from the observed compartment state at from_t and runs
// to the record's t_max. Bands cover days from_t .. t_max - 1.
CurveEnsemble ppd_forecast(const McmcTrace& trace, const EpidemicRecord& record, const Population& pop,
                           const ModelSpec& spec, const ClusterAssignment* clusters, Day from_t,
                           const PpdConfig& config);

}  // namespace cilm
