#include "cilm/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cilm/errors.hpp"

namespace cilm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kHalfLog2Pi = 0.91893853320467274178;

double sq_dist(const Point& a, const Point& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * z * z - std::log(sd) - kHalfLog2Pi;
}

double gamma_logpdf(double x, double shape, double rate) {
  if (!(x > 0.0)) return kNegInf;
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

// log(1 - NB(0 | mu, phi)).
double log_nb_nonzero(double mu, double phi) {
  const double log_p0 = phi * std::log(phi / (mu + phi));
  return std::log(-std::expm1(log_p0));
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

}  // namespace

ClusterAssignment kmeans(const Population& pop, int K, Rng& rng, int max_iters) {
  const std::size_t n = pop.size();
  if (K < 1) throw ValidationError("kmeans needs K >= 1");
  if (static_cast<std::size_t>(K) > n) throw ValidationError("kmeans needs K <= N");
  const auto Ku = static_cast<std::size_t>(K);

  std::vector<Point> centroids;
  centroids.reserve(Ku);
  centroids.push_back(pop[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)]);
  std::vector<double> d2(n);
  while (centroids.size() < Ku) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centroids) best = std::min(best, sq_dist(pop[i], c));
      d2[i] = best;
      total += best;
    }
    double u = uniform01(rng) * total;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      u -= d2[i];
      if (u < 0.0) break;
    }
    centroids.push_back(pop[pick]);
  }

  std::vector<int> label(n, -1);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_d = sq_dist(pop[i], centroids[0]);
      for (std::size_t k = 1; k < Ku; ++k) {
        const double d = sq_dist(pop[i], centroids[k]);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(k);
        }
      }
      if (label[i] != best) {
        label[i] = best;
        changed = true;
      }
    }
    std::vector<Point> sums(Ku);
    std::vector<int> counts(Ku, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<std::size_t>(label[i]);
      sums[k].x += pop[i].x;
      sums[k].y += pop[i].y;
      ++counts[k];
    }
    for (std::size_t k = 0; k < Ku; ++k) {
      if (counts[k] > 0) {
        centroids[k] = {sums[k].x / counts[k], sums[k].y / counts[k]};
        continue;
      }
      std::size_t far = 0;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[static_cast<std::size_t>(label[i])] <= 1) continue;
        const double d = sq_dist(pop[i], centroids[static_cast<std::size_t>(label[i])]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --counts[static_cast<std::size_t>(label[far])];
      label[far] = static_cast<int>(k);
      counts[k] = 1;
      centroids[k] = pop[far];
      changed = true;
    }
    if (!changed) break;
  }
  return ClusterAssignment::from_labels(pop, std::move(label));
}

double within_cluster_ss(const Population& pop, const ClusterAssignment& a) {
  double ss = 0.0;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    ss += sq_dist(pop[i], a.centroids[static_cast<std::size_t>(a.membership[i])]);
  }
  return ss;
}

Point StandardizedData::to_original(double sx, double sy) const {
  const double span = t_max - t_min;
  return {x_min + (sx - t_min) * (x_max - x_min) / span, y_min + (sy - t_min) * (y_max - y_min) / span};
}

StandardizedData standardize(const Population& pop, const EpidemicRecord& record, std::optional<double> t_min,
                             std::optional<double> t_max) {
  if (record.size() != pop.size()) throw ValidationError("record does not match population");
  StandardizedData out;
  out.t_min = t_min.value_or(0.0);
  out.t_max = t_max.value_or(static_cast<double>(record.t_max()));
  if (!(out.t_max > out.t_min)) throw ValidationError("standardization needs t_max > t_min");
  const std::size_t n = pop.size();
  if (n == 0) throw ValidationError("standardization needs a non-empty population");
  out.x_min = out.x_max = pop[0].x;
  out.y_min = out.y_max = pop[0].y;
  for (std::size_t i = 1; i < n; ++i) {
    out.x_min = std::min(out.x_min, pop[i].x);
    out.x_max = std::max(out.x_max, pop[i].x);
    out.y_min = std::min(out.y_min, pop[i].y);
    out.y_max = std::max(out.y_max, pop[i].y);
  }
  if (!(out.x_max > out.x_min) || !(out.y_max > out.y_min)) {
    throw ValidationError("degenerate coordinate range; cannot standardize");
  }
  const double span = out.t_max - out.t_min;
  out.x.resize(n);
  out.y.resize(n);
  out.t.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.x[i] = out.t_min + span * (pop[i].x - out.x_min) / (out.x_max - out.x_min);
    out.y[i] = out.t_min + span * (pop[i].y - out.y_min) / (out.y_max - out.y_min);
    const auto& inf = record.infection(i);
    out.t[i] = inf ? std::max(*inf, 1) : 0;
  }
  return out;
}

double nb_logpmf(int t, double mu, double phi) {
  if (!(mu > 0.0) || !(phi > 0.0)) throw DomainError("negative binomial needs mu > 0 and phi > 0");
  if (t < 0) return kNegInf;
  const double td = static_cast<double>(t);
  return std::lgamma(td + phi) - std::lgamma(phi) - std::lgamma(td + 1.0) + td * std::log(mu / (mu + phi)) +
         phi * std::log(phi / (mu + phi));
}

double hurdle_nb_logpmf(int t, double theta, double mu, double phi) {
  if (!(theta > 0.0 && theta < 1.0)) throw DomainError("hurdle probability must lie in (0, 1)");
  if (!(mu > 0.0) || !(phi > 0.0)) throw DomainError("negative binomial needs mu > 0 and phi > 0");
  if (t < 0) return kNegInf;
  if (t == 0) return std::log(theta);
  return std::log1p(-theta) + nb_logpmf(t, mu, phi) - log_nb_nonzero(mu, phi);
}

std::vector<double> stick_breaking_weights(std::span<const double> U) {
  if (U.empty() || U.back() != 1.0) throw DomainError("stick-breaking needs U_M = 1");
  std::vector<double> pi(U.size());
  double remaining = 1.0;
  for (std::size_t m = 0; m < U.size(); ++m) {
    pi[m] = remaining * U[m];
    remaining *= 1.0 - U[m];
  }
  return pi;
}

int DpmmState::occupied() const {
  std::vector<bool> seen(cx.size(), false);
  for (int m : g) seen[static_cast<std::size_t>(m)] = true;
  return static_cast<int>(std::count(seen.begin(), seen.end(), true));
}

namespace dpmm {

double draw_spatial_mean(Rng& rng, std::span<const double> values, double omega, double lo, double hi) {
  if (values.empty()) return lo + (hi - lo) * uniform01(rng);
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return normal(rng, mean, omega / std::sqrt(static_cast<double>(values.size())));
}

double draw_theta(Rng& rng, int n_zero, int n_positive) { return beta(rng, n_zero + 2.0, n_positive + 2.0); }

std::vector<double> draw_sticks(Rng& rng, std::span<const int> sizes, double gamma) {
  const std::size_t M = sizes.size();
  std::vector<double> U(M, 1.0);
  double tail = 0.0;
  std::vector<double> after(M, 0.0);
  for (std::size_t m = M; m-- > 0;) {
    after[m] = tail;
    tail += sizes[m];
  }
  for (std::size_t m = 0; m + 1 < M; ++m) {
    // Keep 1 - U strictly positive so the gamma update stays finite.
    U[m] = std::min(beta(rng, sizes[m] + 1.0, gamma + after[m]), 1.0 - 1e-12);
  }
  return U;
}

double draw_gamma(Rng& rng, std::span<const double> U) {
  double s = 0.0;
  for (std::size_t m = 0; m + 1 < U.size(); ++m) s += std::log1p(-U[m]);
  return gamma_rate(rng, static_cast<double>(U.size()), 2.0 - s);
}

}  // namespace dpmm

namespace {

// Per-sweep state for the Gibbs sampler with its adaptive proposal scales.
class DpmmSampler {
 public:
  DpmmSampler(const StandardizedData& data, const DpmmConfig& cfg, Rng& rng)
      : d_(data), cfg_(cfg), rng_(rng), M_(static_cast<std::size_t>(cfg.components)) {
    if (data.size() < 2) throw ValidationError("DPMM clustering needs N >= 2");
    if (cfg.components < 2) throw ValidationError("DPMM needs at least 2 components");
    for (int t : data.t) t_cap_ = std::max(t_cap_, t);
    s_.g.assign(d_.size(), 0);
    s_.cx.resize(M_);
    s_.cy.resize(M_);
    s_.ct.resize(M_);
    s_.theta.resize(M_);
    for (std::size_t m = 0; m < M_; ++m) {
      s_.cx[m] = prior_mean();
      s_.cy[m] = prior_mean();
      s_.ct[m] = prior_mean();
      s_.theta[m] = beta(rng_, 2.0, 2.0);
    }
    s_.omega_x = s_.omega_y = s_.phi = 1.5;
    s_.gamma = 1.0;
    s_.U.assign(M_, 1.0);
    for (std::size_t m = 0; m + 1 < M_; ++m) s_.U[m] = std::min(beta(rng_, 1.0, s_.gamma), 1.0 - 1e-12);
    s_.pi = stick_breaking_weights(s_.U);
  }

  const DpmmState& state() const { return s_; }

  void sweep(bool adapt) {
    update_memberships();
    std::vector<std::vector<std::size_t>> members(M_);
    for (std::size_t n = 0; n < d_.size(); ++n) members[static_cast<std::size_t>(s_.g[n])].push_back(n);
    update_spatial_means(members);
    if (cfg_.temporal) {
      update_temporal_means(members);
      update_thetas(members);
    }
    update_scales();
    std::vector<int> sizes(M_);
    for (std::size_t m = 0; m < M_; ++m) sizes[m] = static_cast<int>(members[m].size());
    s_.U = dpmm::draw_sticks(rng_, sizes, s_.gamma);
    s_.gamma = dpmm::draw_gamma(rng_, s_.U);
    s_.pi = stick_breaking_weights(s_.U);
    if (!adapt) {
      ct_tuner_.freeze();
      ox_tuner_.freeze();
      oy_tuner_.freeze();
      phi_tuner_.freeze();
    }
  }

 private:
  double prior_mean() { return d_.t_min + (d_.t_max - d_.t_min) * uniform01(rng_); }

  // Temporal log-likelihood of a positive time t under component mean mu.
  double zt_nb(int t, double mu, double phi) const { return nb_logpmf(t, mu, phi) - log_nb_nonzero(mu, phi); }

  void update_memberships() {
    const double phi = s_.phi;
    // lgamma(t + phi) - lgamma(t + 1) for every t that occurs.
    std::vector<double> t_term(static_cast<std::size_t>(t_cap_) + 1, 0.0);
    for (int t = 1; t <= t_cap_; ++t) t_term[static_cast<std::size_t>(t)] = std::lgamma(t + phi) - std::lgamma(t + 1.0);
    std::vector<double> base(M_);
    std::vector<double> slope(M_);
    std::vector<double> zero_term(M_);
    std::vector<double> log_pi(M_);
    for (std::size_t m = 0; m < M_; ++m) {
      log_pi[m] = s_.pi[m] > 0.0 ? std::log(s_.pi[m]) : kNegInf;
      const double mu = s_.ct[m];
      zero_term[m] = std::log(s_.theta[m]);
      base[m] = std::log1p(-s_.theta[m]) - std::lgamma(phi) + phi * std::log(phi / (mu + phi)) -
                log_nb_nonzero(mu, phi);
      slope[m] = std::log(mu / (mu + phi));
    }
    const double lox = std::log(s_.omega_x);
    const double loy = std::log(s_.omega_y);
    std::vector<double> lw(M_);
    for (std::size_t n = 0; n < d_.size(); ++n) {
      const int t = d_.t[n];
      for (std::size_t m = 0; m < M_; ++m) {
        const double zx = (d_.x[n] - s_.cx[m]) / s_.omega_x;
        const double zy = (d_.y[n] - s_.cy[m]) / s_.omega_y;
        double w = log_pi[m] - 0.5 * (zx * zx + zy * zy) - lox - loy;
        if (cfg_.temporal) {
          w += t == 0 ? zero_term[m] : base[m] + t * slope[m] + t_term[static_cast<std::size_t>(t)];
        }
        lw[m] = w;
      }
      s_.g[n] = static_cast<int>(categorical_log(rng_, lw));
    }
  }

  void update_spatial_means(const std::vector<std::vector<std::size_t>>& members) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t m = 0; m < M_; ++m) {
      xs.clear();
      ys.clear();
      for (std::size_t n : members[m]) {
        xs.push_back(d_.x[n]);
        ys.push_back(d_.y[n]);
      }
      s_.cx[m] = dpmm::draw_spatial_mean(rng_, xs, s_.omega_x, d_.t_min, d_.t_max);
      s_.cy[m] = dpmm::draw_spatial_mean(rng_, ys, s_.omega_y, d_.t_min, d_.t_max);
    }
  }

  double ct_logpost(double mu, const std::vector<std::size_t>& idx) const {
    if (!(mu > d_.t_min && mu < d_.t_max) || !(mu > 0.0)) return kNegInf;
    double lp = 0.0;
    for (std::size_t n : idx) {
      if (d_.t[n] > 0) lp += zt_nb(d_.t[n], mu, s_.phi);
    }
    return lp;
  }

  void update_temporal_means(const std::vector<std::vector<std::size_t>>& members) {
    for (std::size_t m = 0; m < M_; ++m) {
      if (members[m].empty()) {
        s_.ct[m] = prior_mean();
        continue;
      }
      const double cur = s_.ct[m];
      const double prop = cur + normal(rng_, 0.0, ct_tuner_.scale());
      const double lp_prop = ct_logpost(prop, members[m]);
      const bool accept = lp_prop > kNegInf && std::log(uniform01(rng_)) < lp_prop - ct_logpost(cur, members[m]);
      if (accept) s_.ct[m] = prop;
      ct_tuner_.record(accept);
    }
  }

  void update_thetas(const std::vector<std::vector<std::size_t>>& members) {
    for (std::size_t m = 0; m < M_; ++m) {
      int zero = 0;
      for (std::size_t n : members[m]) zero += d_.t[n] == 0 ? 1 : 0;
      s_.theta[m] = dpmm::draw_theta(rng_, zero, static_cast<int>(members[m].size()) - zero);
    }
  }

  double omega_logpost(double omega, bool x_axis) const {
    if (!(omega > 0.0)) return kNegInf;
    double lp = gamma_logpdf(omega, 1.5, 1.0) + std::log(omega);
    const auto& v = x_axis ? d_.x : d_.y;
    const auto& c = x_axis ? s_.cx : s_.cy;
    for (std::size_t n = 0; n < d_.size(); ++n) lp += normal_logpdf(v[n], c[static_cast<std::size_t>(s_.g[n])], omega);
    return lp;
  }

  double phi_logpost(double phi) const {
    if (!(phi > 0.0)) return kNegInf;
    double lp = gamma_logpdf(phi, 1.5, 1.0) + std::log(phi);
    for (std::size_t n = 0; n < d_.size(); ++n) {
      if (d_.t[n] > 0) lp += zt_nb(d_.t[n], s_.ct[static_cast<std::size_t>(s_.g[n])], phi);
    }
    return lp;
  }

  template <typename LogPost>
  double log_scale_step(double cur, StepTuner& tuner, LogPost&& logpost) {
    const double prop = cur * std::exp(normal(rng_, 0.0, tuner.scale()));
    const double lp_prop = logpost(prop);
    const bool accept = lp_prop > kNegInf && std::log(uniform01(rng_)) < lp_prop - logpost(cur);
    tuner.record(accept);
    return accept ? prop : cur;
  }

  void update_scales() {
    s_.omega_x = log_scale_step(s_.omega_x, ox_tuner_, [&](double w) { return omega_logpost(w, true); });
    s_.omega_y = log_scale_step(s_.omega_y, oy_tuner_, [&](double w) { return omega_logpost(w, false); });
    if (cfg_.temporal) s_.phi = log_scale_step(s_.phi, phi_tuner_, [&](double p) { return phi_logpost(p); });
  }

  const StandardizedData& d_;
  const DpmmConfig& cfg_;
  Rng& rng_;
  std::size_t M_;
  int t_cap_ = 0;
  DpmmState s_;
  StepTuner ct_tuner_{1.0};
  StepTuner ox_tuner_{0.1};
  StepTuner oy_tuner_{0.1};
  StepTuner phi_tuner_{0.2};
};

}  // namespace

std::vector<DpmmState> dpmm_gibbs(const StandardizedData& data, const DpmmConfig& config, Rng& rng) {
  if (config.iterations < 1) throw ValidationError("DPMM needs at least one sweep");
  DpmmSampler sampler(data, config, rng);
  std::vector<DpmmState> chain;
  chain.reserve(static_cast<std::size_t>(config.iterations));
  for (int it = 0; it < config.iterations; ++it) {
    sampler.sweep(it < config.burn_in);
    chain.push_back(sampler.state());
  }
  return chain;
}

ClusterAssignment extract_assignment(std::span<const DpmmState> chain, int burn_in, const StandardizedData& data) {
  const std::size_t start = static_cast<std::size_t>(std::max(burn_in, 0));
  if (chain.size() <= start) throw ValidationError("DPMM chain has no post-burn-in sweeps");
  const std::size_t n = data.size();
  const std::size_t M = chain.front().cx.size();
  std::vector<int> label(n);
  std::vector<int> tally(M);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(tally.begin(), tally.end(), 0);
    for (std::size_t s = start; s < chain.size(); ++s) ++tally[static_cast<std::size_t>(chain[s].g[i])];
    label[i] = static_cast<int>(std::max_element(tally.begin(), tally.end()) - tally.begin());
  }
  std::vector<int> compact(M, -1);
  for (int l : label) compact[static_cast<std::size_t>(l)] = 0;
  int K = 0;
  for (auto& c : compact) {
    if (c == 0) c = K++;
  }
  ClusterAssignment out;
  out.K = K;
  out.membership.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.membership[i] = compact[static_cast<std::size_t>(label[i])];
  out.centroids.resize(static_cast<std::size_t>(K));
  for (std::size_t m = 0; m < M; ++m) {
    if (compact[m] < 0) continue;
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t s = start; s < chain.size(); ++s) {
      const bool occupied = std::find(chain[s].g.begin(), chain[s].g.end(), static_cast<int>(m)) != chain[s].g.end();
      if (!occupied) continue;
      xs.push_back(chain[s].cx[m]);
      ys.push_back(chain[s].cy[m]);
    }
    out.centroids[static_cast<std::size_t>(compact[m])] = data.to_original(median(xs), median(ys));
  }
  return out;
}

}  // namespace cilm
