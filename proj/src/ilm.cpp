#include "cilm/ilm.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "cilm/errors.hpp"
#include "cilm/simd/kernels.hpp"

namespace cilm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double euclid(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

bool positive(const std::optional<double>& v) { return v && std::isfinite(*v) && *v > 0.0; }

}  // namespace

std::string_view spark_name(SparkKind s) {
  switch (s) {
    case SparkKind::Zero: return "zero";
    case SparkKind::Constant: return "constant";
    case SparkKind::M1: return "m1";
    case SparkKind::M2: return "m2";
    case SparkKind::M3: return "m3";
    case SparkKind::M4: return "m4";
  }
  return "zero";
}

SparkKind parse_spark(std::string_view name) {
  for (SparkKind s : {SparkKind::Zero, SparkKind::Constant, SparkKind::M1, SparkKind::M2, SparkKind::M3,
                      SparkKind::M4}) {
    if (spark_name(s) == name) return s;
  }
  throw ValidationError("unknown spark function '" + std::string(name) + "'");
}

bool spark_needs_clusters(SparkKind s) {
  return s == SparkKind::M1 || s == SparkKind::M2 || s == SparkKind::M3 || s == SparkKind::M4;
}

std::vector<std::string> ModelSpec::parameter_names() const {
  std::vector<std::string> names{"alpha", "beta"};
  if (spark_needs_clusters(spark)) names.emplace_back("beta_tilde");
  if (spark == SparkKind::Constant || spark == SparkKind::M1) names.emplace_back("epsilon");
  if (spark == SparkKind::M4) names.emplace_back("delta");
  return names;
}

void ModelSpec::validate() const {
  if (spark_needs_clusters(spark) && !composite) {
    throw UsageError("spark '" + std::string(spark_name(spark)) + "' requires the composite model");
  }
  if (frame == Frame::SEIR && latent_period < 1) throw UsageError("SEIR model requires latent_period >= 1");
  if (infectious_period && *infectious_period < 1) throw UsageError("infectious_period must be >= 1");
}

void check_params(const ModelSpec& spec, const ModelParams& p) {
  if (!(std::isfinite(p.alpha) && p.alpha > 0.0)) throw DomainError("alpha must be > 0");
  if (!(std::isfinite(p.beta) && p.beta > 0.0)) throw DomainError("beta must be > 0");
  if (spark_needs_clusters(spec.spark) && !positive(p.beta_tilde)) throw DomainError("beta_tilde must be > 0");
  if ((spec.spark == SparkKind::Constant || spec.spark == SparkKind::M1) && !positive(p.epsilon)) {
    throw DomainError("epsilon must be > 0");
  }
  if (spec.spark == SparkKind::M4 && !(p.delta && std::isfinite(*p.delta))) {
    throw DomainError("delta must be a finite real");
  }
}

ModelParams params_from_vector(const ModelSpec& spec, std::span<const double> values) {
  const auto names = spec.parameter_names();
  if (values.size() != names.size()) throw UsageError("parameter vector has wrong length");
  ModelParams p;
  for (std::size_t k = 0; k < names.size(); ++k) {
    const std::string& n = names[k];
    if (n == "alpha") p.alpha = values[k];
    else if (n == "beta") p.beta = values[k];
    else if (n == "beta_tilde") p.beta_tilde = values[k];
    else if (n == "epsilon") p.epsilon = values[k];
    else p.delta = values[k];
  }
  return p;
}

std::vector<double> params_to_vector(const ModelSpec& spec, const ModelParams& p) {
  std::vector<double> out;
  for (const auto& n : spec.parameter_names()) {
    if (n == "alpha") out.push_back(p.alpha);
    else if (n == "beta") out.push_back(p.beta);
    else if (n == "beta_tilde") out.push_back(p.beta_tilde.value_or(0.0));
    else if (n == "epsilon") out.push_back(p.epsilon.value_or(0.0));
    else out.push_back(p.delta.value_or(1.0));
  }
  return out;
}

ClusterAssignment ClusterAssignment::from_labels(const Population& pop, std::vector<int> labels) {
  if (labels.size() != pop.size()) throw ValidationError("label count does not match population size");
  int K = 0;
  for (int l : labels) {
    if (l < 0) throw ValidationError("negative cluster label");
    K = std::max(K, l + 1);
  }
  std::vector<Point> sums(static_cast<std::size_t>(K));
  std::vector<int> n(static_cast<std::size_t>(K), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto k = static_cast<std::size_t>(labels[i]);
    sums[k].x += pop[i].x;
    sums[k].y += pop[i].y;
    ++n[k];
  }
  for (std::size_t k = 0; k < sums.size(); ++k) {
    if (n[k] > 0) {
      sums[k].x /= n[k];
      sums[k].y /= n[k];
    }
  }
  return ClusterAssignment{std::move(labels), std::move(sums), K};
}

void ClusterAssignment::validate(std::size_t n) const {
  if (membership.size() != n) throw ValidationError("cluster assignment size does not match population");
  if (K < 1 || centroids.size() != static_cast<std::size_t>(K)) {
    throw ValidationError("cluster assignment needs K >= 1 centroids");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (membership[i] < 0 || membership[i] >= K) {
      throw ValidationError("cluster label out of range for id " + std::to_string(i));
    }
  }
}

bool ClusterAssignment::all_occupied() const {
  std::vector<bool> seen(static_cast<std::size_t>(K), false);
  for (int m : membership) seen[static_cast<std::size_t>(m)] = true;
  return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

double spark_for_cluster(SparkKind spark, const ModelParams& params, int k, std::span<const int> counts,
                         std::span<const double> distances_from_k) {
  switch (spark) {
    case SparkKind::Zero: return 0.0;
    case SparkKind::Constant: return *params.epsilon;
    default: break;
  }
  const double bt = *params.beta_tilde;
  double sum = 0.0;
  for (std::size_t kp = 0; kp < counts.size(); ++kp) {
    if (static_cast<int>(kp) == k || counts[kp] == 0) continue;
    const double weight = spark == SparkKind::M4 ? std::pow(static_cast<double>(counts[kp]), *params.delta)
                                                 : static_cast<double>(counts[kp]);
    sum += weight * std::pow(distances_from_k[kp], -bt);
  }
  const double scale = spark == SparkKind::M1 ? *params.epsilon : params.alpha;
  return scale * sum;
}

double spark_rate(int id, Day t, const CompartmentTimeline& timeline, const ModelParams& params,
                  const Population& pop, const ClusterAssignment* clusters, const ModelSpec& spec) {
  if (spec.spark == SparkKind::Zero) return 0.0;
  if (spec.spark == SparkKind::Constant) return *params.epsilon;
  if (!spec.composite || clusters == nullptr) {
    throw UsageError("spark '" + std::string(spark_name(spec.spark)) + "' requires composite mode with clusters");
  }
  const auto K = static_cast<std::size_t>(clusters->K);
  std::vector<int> counts(K, 0);
  std::vector<Point> inf_sum(K);
  for (int j : timeline.I(t)) {
    const auto kj = static_cast<std::size_t>(clusters->membership[static_cast<std::size_t>(j)]);
    ++counts[kj];
    inf_sum[kj].x += pop[static_cast<std::size_t>(j)].x;
    inf_sum[kj].y += pop[static_cast<std::size_t>(j)].y;
  }
  const int k = clusters->membership[static_cast<std::size_t>(id)];
  std::vector<double> d(K, 0.0);
  for (std::size_t kp = 0; kp < K; ++kp) {
    if (spec.spark == SparkKind::M3) {
      const auto kk = static_cast<std::size_t>(k);
      if (counts[kp] == 0) continue;
      const Point a = counts[kk] == 0 ? clusters->centroids[kk]
                                      : Point{inf_sum[kk].x / counts[kk], inf_sum[kk].y / counts[kk]};
      const Point b{inf_sum[kp].x / counts[kp], inf_sum[kp].y / counts[kp]};
      d[kp] = euclid(a, b);
    } else {
      d[kp] = euclid(clusters->centroids[static_cast<std::size_t>(k)], clusters->centroids[kp]);
    }
  }
  return spark_for_cluster(spec.spark, params, k, counts, d);
}

double infectivity_rate(int id, Day t, const CompartmentTimeline& timeline, const ModelParams& params,
                        const Population& pop, const DistanceMatrix& dist, const ClusterAssignment* clusters,
                        const ModelSpec& spec) {
  const bool composite = spec.composite && clusters != nullptr;
  if (spec.composite && clusters == nullptr) throw UsageError("composite model requires a cluster assignment");
  double kernel = 0.0;
  for (int j : timeline.I(t)) {
    if (composite && clusters->membership[static_cast<std::size_t>(j)] !=
                         clusters->membership[static_cast<std::size_t>(id)]) {
      continue;
    }
    kernel += std::pow(dist(static_cast<std::size_t>(id), static_cast<std::size_t>(j)), -params.beta);
  }
  const double rate = params.alpha * kernel + spark_rate(id, t, timeline, params, pop, clusters, spec);
  if (!std::isfinite(rate)) throw NumericalError(id, t, "non-finite infection rate");
  return rate;
}

double infection_probability(double rate) {
  if (!(rate >= 0.0)) throw DomainError("infection rate must be non-negative");
  return -std::expm1(-rate);
}

double log_infection_probability(double rate) {
  if (!(rate >= 0.0)) throw DomainError("infection rate must be non-negative");
  if (rate == 0.0) return kNegInf;
  // log(-expm1(-r)) is accurate for small r; log1p(-exp(-r)) for large r.
  return rate < 0.6931471805599453 ? std::log(-std::expm1(-rate)) : std::log1p(-std::exp(-rate));
}

// ---------------------------------------------------------------------------

LikelihoodEvaluator::LikelihoodEvaluator(const Population& pop, const EpidemicRecord& record,
                                         const ModelSpec& spec, const DistanceMatrix& dist,
                                         const ClusterAssignment* clusters, int workers)
    : spec_(spec), workers_(workers > 0 ? workers : omp_get_max_threads()) {
  spec_.validate();
  const std::size_t n = pop.size();
  if (record.size() != n || dist.size() != n) throw ValidationError("population, record and distances differ in size");
  if (spec_.composite) {
    if (clusters == nullptr) throw UsageError("composite model requires a cluster assignment");
    clusters->validate(n);
    K_ = clusters->K;
  }
  const auto K = static_cast<std::size_t>(K_);
  auto cluster_of = [&](std::size_t i) -> int {
    return spec_.composite ? clusters->membership[i] : 0;
  };

  const CompartmentTimeline timeline(record, spec_.timeline());
  const auto first = record.first_infection();
  t_first_ = first ? std::max(record.observe_from(), *first) : record.observe_from();
  t_end_ = std::max(record.t_max(), t_first_);
  const auto T = static_cast<std::size_t>(t_end_ - t_first_);

  // Spark Zero in composite mode conditions on each cluster's earliest onset.
  std::vector<std::optional<Day>> cluster_first(K);
  if (spec_.composite && spec_.spark == SparkKind::Zero) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto on = timeline.onset(i);
      auto& cf = cluster_first[static_cast<std::size_t>(cluster_of(i))];
      if (on && (!cf || *on < *cf)) cf = on;
    }
  }

  counts_.assign(T * K, 0);
  std::vector<std::vector<int>> infectious(T * K);
  for (std::size_t s = 0; s < T; ++s) {
    const Day t = t_first_ + static_cast<Day>(s);
    for (std::size_t j = 0; j < n; ++j) {
      if (timeline.infectious(j, t)) {
        const auto k = static_cast<std::size_t>(cluster_of(j));
        infectious[s * K + k].push_back(static_cast<int>(j));
        ++counts_[s * K + k];
      }
    }
  }

  if (spec_.composite) {
    centroid_dist_.assign(K * K, 0.0);
    for (std::size_t a = 0; a < K; ++a) {
      for (std::size_t b = 0; b < K; ++b) centroid_dist_[a * K + b] = euclid(clusters->centroids[a], clusters->centroids[b]);
    }
    if (spec_.spark == SparkKind::M3) {
      inf_centroid_dist_.assign(T * K * K, 0.0);
      for (std::size_t s = 0; s < T; ++s) {
        std::vector<Point> c(K);
        for (std::size_t k = 0; k < K; ++k) {
          for (int j : infectious[s * K + k]) {
            c[k].x += pop[static_cast<std::size_t>(j)].x;
            c[k].y += pop[static_cast<std::size_t>(j)].y;
          }
          const int m = counts_[s * K + k];
          c[k] = m > 0 ? Point{c[k].x / m, c[k].y / m} : clusters->centroids[k];
        }
        for (std::size_t a = 0; a < K; ++a) {
          for (std::size_t b = 0; b < K; ++b) {
            const bool used = counts_[s * K + b] > 0;
            inf_centroid_dist_[(s * K + a) * K + b] = used ? euclid(c[a], c[b]) : 0.0;
          }
        }
      }
    }
  }

  // Units grouped by (cluster, day), ids ascending within a block.
  std::vector<std::vector<int>> members(K);
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(cluster_of(i))].push_back(static_cast<int>(i));
  std::size_t offset = 0;
  for (std::size_t k = 0; k < K; ++k) {
    for (std::size_t s = 0; s < T; ++s) {
      const Day t = t_first_ + static_cast<Day>(s);
      Block b{static_cast<int>(k), t, units_.size(), units_.size(), infectious[s * K + k].size(), offset};
      for (int i : members[k]) {
        const auto iu = static_cast<std::size_t>(i);
        if (!timeline.susceptible(iu, t)) continue;
        const auto on = timeline.onset(iu);
        const bool infected = on && *on == t + 1;
        if (infected && cluster_first[k] && *cluster_first[k] == t + 1) continue;
        units_.push_back({i, t, infected});
      }
      b.unit_end = units_.size();
      offset += (b.unit_end - b.unit_begin) * b.n_infectious;
      blocks_.push_back(b);
    }
  }

  log_dist_.resize(offset);
#pragma omp parallel for schedule(dynamic) num_threads(workers_)
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    const auto s = static_cast<std::size_t>(b.t - t_first_);
    const auto& inf = infectious[s * K + static_cast<std::size_t>(b.cluster)];
    double* out = log_dist_.data() + b.dist_offset;
    for (std::size_t u = b.unit_begin; u < b.unit_end; ++u) {
      const auto i = static_cast<std::size_t>(units_[u].id);
      for (int j : inf) *out++ = std::log(dist(i, static_cast<std::size_t>(j)));
    }
  }
}

std::vector<double> LikelihoodEvaluator::kernel_sums(double beta) const {
  std::vector<double> out(units_.size());
  kernel_sums(beta, out);
  return out;
}

void LikelihoodEvaluator::kernel_sums(double beta, std::span<double> out) const {
  if (out.size() != units_.size()) throw UsageError("kernel sum buffer has wrong size");
#pragma omp parallel for schedule(dynamic) num_threads(workers_) if (log_dist_.size() > 4096)
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    const double* row = log_dist_.data() + b.dist_offset;
    for (std::size_t u = b.unit_begin; u < b.unit_end; ++u, row += b.n_infectious) {
      out[u] = b.n_infectious == 0 ? 0.0 : simd::power_kernel_sum({row, b.n_infectious}, beta);
    }
  }
}

void LikelihoodEvaluator::block_sparks(const ModelParams& params, std::vector<double>& out) const {
  out.assign(blocks_.size(), 0.0);
  if (spec_.spark == SparkKind::Zero) return;
  const auto K = static_cast<std::size_t>(K_);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    const auto s = static_cast<std::size_t>(b.t - t_first_);
    const auto k = static_cast<std::size_t>(b.cluster);
    std::span<const int> counts(counts_.data() + s * K, K);
    std::span<const double> d = spec_.spark == SparkKind::M3
                                    ? std::span<const double>(inf_centroid_dist_.data() + (s * K + k) * K, K)
                                    : std::span<const double>(centroid_dist_.data() + k * K, K);
    if (spec_.spark == SparkKind::Constant) d = {};
    out[bi] = spark_for_cluster(spec_.spark, params, b.cluster, counts, d);
  }
}

double LikelihoodEvaluator::unit_term(const Unit& u, double rate) const {
  if (!std::isfinite(rate) || rate < 0.0) throw NumericalError(u.id, u.t, "non-finite infection rate");
  return u.infected ? log_infection_probability(rate) : -rate;
}

double LikelihoodEvaluator::log_likelihood(const ModelParams& params) const {
  check_params(spec_, params);
  return log_likelihood(params, kernel_sums(params.beta));
}

double LikelihoodEvaluator::log_likelihood(const ModelParams& params, std::span<const double> sums) const {
  check_params(spec_, params);
  std::vector<double> spark;
  block_sparks(params, spark);
  // Per-block partials, then a fixed-order reduction.
  std::vector<double> partial(blocks_.size(), 0.0);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    double acc = 0.0;
    for (std::size_t u = b.unit_begin; u < b.unit_end; ++u) {
      acc += unit_term(units_[u], params.alpha * sums[u] + spark[bi]);
    }
    partial[bi] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

void LikelihoodEvaluator::pointwise(const ModelParams& params, std::span<const double> sums,
                                    std::span<double> out) const {
  check_params(spec_, params);
  if (out.size() != units_.size()) throw UsageError("pointwise buffer has wrong size");
  std::vector<double> spark;
  block_sparks(params, spark);
  for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
    const Block& b = blocks_[bi];
    for (std::size_t u = b.unit_begin; u < b.unit_end; ++u) {
      out[u] = unit_term(units_[u], params.alpha * sums[u] + spark[bi]);
    }
  }
}

double log_likelihood(const EpidemicRecord& record, const ModelParams& params, const ModelSpec& spec,
                      const Population& pop, const DistanceMatrix& dist, const ClusterAssignment* clusters,
                      int workers) {
  ModelSpec s = spec;
  if (clusters == nullptr) s.composite = false;
  return LikelihoodEvaluator(pop, record, s, dist, clusters, workers).log_likelihood(params);
}

double composite_log_likelihood(const EpidemicRecord& record, const ModelParams& params, const ModelSpec& spec,
                                const Population& pop, const DistanceMatrix& dist,
                                const ClusterAssignment& clusters, int workers) {
  ModelSpec s = spec;
  s.composite = true;
  return LikelihoodEvaluator(pop, record, s, dist, &clusters, workers).log_likelihood(params);
}

}  // namespace cilm
