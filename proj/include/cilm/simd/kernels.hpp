#pragma once

// Data-parallel inner loops. Each kernel has a scalar reference in
// cilm::simd::scalar and, on x86-64, an AVX2 variant in cilm::simd::avx2.
// The free functions dispatch to the best backend detected at runtime.

#include <span>
#include <string_view>

namespace cilm::simd {

enum class Backend { Scalar, Avx2 };

bool avx2_supported();
Backend active_backend();
std::string_view backend_name(Backend b);
// Overrides runtime detection. Requesting Avx2 on a machine without it
// falls back to Scalar. The CILM_SIMD environment variable ("scalar" or
// "avx2") sets the initial choice.
void force_backend(Backend b);

// Sum of exp(-decay * log_dist[j]), i.e. the power-law kernel sum
// sum_j d_j^-decay given log distances.
double power_kernel_sum(std::span<const double> log_dist, double decay);

// out[j] = exp(-decay * log_dist[j]).
void power_kernel_fill(std::span<const double> log_dist, double decay, std::span<double> out);

// out[j] = sqrt((xs[j]-x)^2 + (ys[j]-y)^2). Bit-identical across backends.
void distance_row(double x, double y, std::span<const double> xs, std::span<const double> ys,
                  std::span<double> out);

namespace scalar {
double power_kernel_sum(std::span<const double> log_dist, double decay);
void power_kernel_fill(std::span<const double> log_dist, double decay, std::span<double> out);
void distance_row(double x, double y, std::span<const double> xs, std::span<const double> ys,
                  std::span<double> out);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define CILM_HAVE_AVX2_KERNELS 1
namespace avx2 {
double power_kernel_sum(std::span<const double> log_dist, double decay);
void power_kernel_fill(std::span<const double> log_dist, double decay, std::span<double> out);
void distance_row(double x, double y, std::span<const double> xs, std::span<const double> ys,
                  std::span<double> out);
}  // namespace avx2
#endif

}  // namespace cilm::simd
