#include "cilm/simd/kernels.hpp"

#include <cmath>
#include <cstddef>

namespace cilm::simd::scalar {

double power_kernel_sum(std::span<const double> log_dist, double decay) {
  double sum = 0.0;
  for (double v : log_dist) sum += std::exp(-decay * v);
  return sum;
}

void power_kernel_fill(std::span<const double> log_dist, double decay, std::span<double> out) {
  for (std::size_t j = 0; j < log_dist.size(); ++j) out[j] = std::exp(-decay * log_dist[j]);
}

void distance_row(double x, double y, std::span<const double> xs, std::span<const double> ys,
                  std::span<double> out) {
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const double dx = xs[j] - x;
    const double dy = ys[j] - y;
    const double sq = dx * dx;
    out[j] = std::sqrt(sq + dy * dy);
  }
}

}  // namespace cilm::simd::scalar
