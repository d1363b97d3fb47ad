#include "cilm/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cilm {
namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix(splitmix(splitmix(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

double normal(Rng& rng, double mean, double sd) { return std::normal_distribution<double>(mean, sd)(rng); }

double gamma_rate(Rng& rng, double shape, double rate) {
  return std::gamma_distribution<double>(shape, 1.0 / rate)(rng);
}

double beta(Rng& rng, double a, double b) {
  const double x = gamma_rate(rng, a, 1.0);
  const double y = gamma_rate(rng, b, 1.0);
  if (x + y == 0.0) return a / (a + b);
  return x / (x + y);
}

std::size_t categorical_log(Rng& rng, std::span<const double> log_weights) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) mx = std::max(mx, w);
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - mx);
  double u = uniform01(rng) * total;
  for (std::size_t k = 0; k < log_weights.size(); ++k) {
    u -= std::exp(log_weights[k] - mx);
    if (u < 0.0) return k;
  }
  // Rounding left u marginally positive; return the last positive-weight index.
  for (std::size_t k = log_weights.size(); k-- > 0;) {
    if (log_weights[k] > -std::numeric_limits<double>::infinity()) return k;
  }
  return 0;
}

StepTuner::StepTuner(double initial_scale, double target, int batch)
    : scale_(initial_scale), target_(target), batch_(batch) {}

void StepTuner::record(bool accepted) {
  ++proposals_;
  if (accepted) ++accepts_;
  if (frozen_) return;
  batch_accepts_ += accepted ? 1 : 0;
  if (++batch_count_ < batch_) return;
  ++batches_;
  const double rate = static_cast<double>(batch_accepts_) / batch_count_;
  const double delta = std::min(0.25, 1.0 / std::sqrt(static_cast<double>(batches_)));
  scale_ *= std::exp(rate > target_ ? delta : -delta);
  batch_accepts_ = 0;
  batch_count_ = 0;
}

}  // namespace cilm
