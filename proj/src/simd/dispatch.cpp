#include <atomic>
#include <cstdlib>
#include <string_view>

#include "cilm/simd/kernels.hpp"

namespace cilm::simd {
namespace {

Backend detect() {
  const char* env = std::getenv("CILM_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return Backend::Scalar;
  return avx2_supported() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

bool avx2_supported() {
#ifdef CILM_HAVE_AVX2_KERNELS
  static const bool ok = __builtin_cpu_supports("avx2") != 0;
  return ok;
#else
  return false;
#endif
}

Backend active_backend() { return current().load(std::memory_order_relaxed); }

std::string_view backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
  if (b == Backend::Avx2 && !avx2_supported()) b = Backend::Scalar;
  current().store(b, std::memory_order_relaxed);
}

double power_kernel_sum(std::span<const double> log_dist, double decay) {
#ifdef CILM_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) return avx2::power_kernel_sum(log_dist, decay);
#endif
  return scalar::power_kernel_sum(log_dist, decay);
}

void power_kernel_fill(std::span<const double> log_dist, double decay, std::span<double> out) {
#ifdef CILM_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) return avx2::power_kernel_fill(log_dist, decay, out);
#endif
  scalar::power_kernel_fill(log_dist, decay, out);
}

void distance_row(double x, double y, std::span<const double> xs, std::span<const double> ys,
                  std::span<double> out) {
#ifdef CILM_HAVE_AVX2_KERNELS
  if (active_backend() == Backend::Avx2) return avx2::distance_row(x, y, xs, ys, out);
#endif
  scalar::distance_row(x, y, xs, ys, out);
}

}  // namespace cilm::simd
