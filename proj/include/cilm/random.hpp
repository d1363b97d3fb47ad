#pragma once

// Random streams and the handful of variate generators the samplers need.

#include <cstdint>
#include <random>
#include <span>

namespace cilm {

using Rng = std::mt19937_64;

// Child seed for a named sub-stream: seed -> command -> replicate -> chain.
// SplitMix64 finalizer over the combined words.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

double uniform01(Rng& rng);
double normal(Rng& rng, double mean, double sd);
// Gamma with shape/rate parameterisation.
double gamma_rate(Rng& rng, double shape, double rate);
double beta(Rng& rng, double a, double b);
// Draw an index with probability proportional to exp(log_weights[k]).
std::size_t categorical_log(Rng& rng, std::span<const double> log_weights);

// Robbins-Monro style tuner for a random-walk proposal scale. Every `batch`
// proposals the log scale moves by +-min(0.25, 1/sqrt(batches)) toward the
// target acceptance rate. Frozen once `freeze()` is called.
class StepTuner {
 public:
  explicit StepTuner(double initial_scale = 0.1, double target = 0.44, int batch = 50);

  double scale() const { return scale_; }
  void record(bool accepted);
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }
  double acceptance_rate() const { return proposals_ > 0 ? static_cast<double>(accepts_) / proposals_ : 0.0; }
  void reset_counts() {
    proposals_ = 0;
    accepts_ = 0;
  }

 private:
  double scale_;
  double target_;
  int batch_;
  int batch_accepts_ = 0;
  int batch_count_ = 0;
  int batches_ = 0;
  long proposals_ = 0;
  long accepts_ = 0;
  bool frozen_ = false;
};

}  // namespace cilm
