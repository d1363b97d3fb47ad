// AVX2 variants. This translation unit is compiled with -mavx2 and
// -ffp-contract=off; it is only entered after a runtime CPU check.

#include "cilm/simd/kernels.hpp"

#include <immintrin.h>

#include <array>
#include <cstddef>
#include <cstdint>

namespace cilm::simd::avx2 {
namespace {

// 2^k for integral k in [-1022, 1023] held as doubles.
inline __m256d pow2_pd(__m256d k) {
  const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 2^52 + 2^51
  const __m256i ki = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(k, magic)),
                                      _mm256_castpd_si256(magic));
  return _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(ki, _mm256_set1_epi64x(1023)), 52));
}

// Cephes-style exp: x = n ln2 + r with |r| <= ln2/2, exp(r) from a (3,4)
// Pade form. Max error is about 1 ulp over the normal range.
inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(709.782712893384);
  const __m256d lo = _mm256_set1_pd(-745.1332191019411);
  const __m256d overflow = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

  const __m256d n = _mm256_round_pd(
      _mm256_add_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)), _mm256_set1_pd(0.5)),
      _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
  x = _mm256_sub_pd(x, _mm256_mul_pd(n, _mm256_set1_pd(6.93145751953125E-1)));
  x = _mm256_sub_pd(x, _mm256_mul_pd(n, _mm256_set1_pd(1.42860682030941723212E-6)));

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_add_pd(_mm256_mul_pd(p, xx), _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_add_pd(_mm256_mul_pd(p, xx), _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, x);
  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_add_pd(_mm256_mul_pd(q, xx), _mm256_set1_pd(2.00000000000000000009E0));
  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_add_pd(_mm256_set1_pd(1.0), _mm256_add_pd(e, e));

  // 2^n applied in two halves so n in [-1075, 1024] never leaves the
  // exponent range of an individual factor.
  const __m256d n1 = _mm256_round_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)),
                                     _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
  const __m256d n2 = _mm256_sub_pd(n, n1);
  const __m256d s1 = pow2_pd(n1);
  const __m256d s2 = pow2_pd(n2);
  e = _mm256_mul_pd(_mm256_mul_pd(e, s1), s2);

  e = _mm256_blendv_pd(e, _mm256_set1_pd(__builtin_inf()), overflow);
  e = _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
  return e;
}

inline double hsum(__m256d v) {
  alignas(32) std::array<double, 4> lanes;
  _mm256_store_pd(lanes.data(), v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

double power_kernel_sum(std::span<const double> log_dist, double decay) {
  const std::size_t n = log_dist.size();
  const double* src = log_dist.data();
  const __m256d neg = _mm256_set1_pd(-decay);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t j = 0;
  for (; j + 8 <= n; j += 8) {
    acc0 = _mm256_add_pd(acc0, exp_pd(_mm256_mul_pd(neg, _mm256_loadu_pd(src + j))));
    acc1 = _mm256_add_pd(acc1, exp_pd(_mm256_mul_pd(neg, _mm256_loadu_pd(src + j + 4))));
  }
  for (; j + 4 <= n; j += 4) {
    acc0 = _mm256_add_pd(acc0, exp_pd(_mm256_mul_pd(neg, _mm256_loadu_pd(src + j))));
  }
  if (j < n) {
    alignas(32) std::array<double, 4> tail{0.0, 0.0, 0.0, 0.0};
    alignas(32) std::array<double, 4> mask{0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; j + k < n; ++k) {
      tail[k] = src[j + k];
      mask[k] = -1.0;  // sign bit set selects the lane in blendv
    }
    const __m256d vals = exp_pd(_mm256_mul_pd(neg, _mm256_load_pd(tail.data())));
    acc1 = _mm256_add_pd(acc1, _mm256_blendv_pd(_mm256_setzero_pd(), vals, _mm256_load_pd(mask.data())));
  }
  return hsum(_mm256_add_pd(acc0, acc1));
}

void power_kernel_fill(std::span<const double> log_dist, double decay, std::span<double> out) {
  const std::size_t n = log_dist.size();
  const __m256d neg = _mm256_set1_pd(-decay);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    _mm256_storeu_pd(out.data() + j, exp_pd(_mm256_mul_pd(neg, _mm256_loadu_pd(log_dist.data() + j))));
  }
  if (j < n) {
    alignas(32) std::array<double, 4> tail{0.0, 0.0, 0.0, 0.0};
    for (std::size_t k = 0; j + k < n; ++k) tail[k] = log_dist[j + k];
    _mm256_store_pd(tail.data(), exp_pd(_mm256_mul_pd(neg, _mm256_load_pd(tail.data()))));
    for (std::size_t k = 0; j + k < n; ++k) out[j + k] = tail[k];
  }
}

void distance_row(double x, double y, std::span<const double> xs, std::span<const double> ys,
                  std::span<double> out) {
  const std::size_t n = xs.size();
  const __m256d vx = _mm256_set1_pd(x);
  const __m256d vy = _mm256_set1_pd(y);
  std::size_t j = 0;
  for (; j + 4 <= n; j += 4) {
    const __m256d dx = _mm256_sub_pd(_mm256_loadu_pd(xs.data() + j), vx);
    const __m256d dy = _mm256_sub_pd(_mm256_loadu_pd(ys.data() + j), vy);
    const __m256d sq = _mm256_add_pd(_mm256_mul_pd(dx, dx), _mm256_mul_pd(dy, dy));
    _mm256_storeu_pd(out.data() + j, _mm256_sqrt_pd(sq));
  }
  if (j < n) scalar::distance_row(x, y, xs.subspan(j), ys.subspan(j), out.subspan(j));
}

}  // namespace cilm::simd::avx2
