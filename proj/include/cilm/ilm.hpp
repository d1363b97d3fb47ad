#pragma once

// Spatial ILM infection rates, spark functions and the full/composite
// log-likelihood.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cilm/core.hpp"

namespace cilm {

// Between-cluster transmission term.
//   Zero      no between-cluster infection
//   Constant  eps
//   M1        eps   * sum_{k'!=k} |I_tk'|   * d_kk'^-bt
//   M2        alpha * sum_{k'!=k} |I_tk'|   * d_kk'^-bt
//   M3        as M2 with d between the centroids of currently infectious members;
//             cluster k falls back to its static centroid while it has none
//   M4        alpha * sum_{k'!=k} |I_tk'|^d * d_kk'^-bt
enum class SparkKind { Zero, Constant, M1, M2, M3, M4 };

std::string_view spark_name(SparkKind s);
SparkKind parse_spark(std::string_view name);
bool spark_needs_clusters(SparkKind s);

struct ModelParams {
  double alpha = 0.0;
  double beta = 0.0;
  std::optional<double> epsilon;
  std::optional<double> beta_tilde;
  std::optional<double> delta;
};

struct ModelSpec {
  Frame frame = Frame::SIR;
  SparkKind spark = SparkKind::Zero;
  // Composite (C-ILM): kernel sums restricted to the individual's cluster.
  bool composite = false;
  int latent_period = 0;
  std::optional<int> infectious_period;

  TimelineOptions timeline() const { return {frame, latent_period, infectious_period}; }
  // Free parameters in trace-column order: alpha, beta, beta_tilde, epsilon, delta.
  std::vector<std::string> parameter_names() const;
  // Throws UsageError for inconsistent combinations (e.g. M3 without composite).
  void validate() const;
};

// Throws DomainError if a parameter the model variant uses is missing or out of support.
void check_params(const ModelSpec& spec, const ModelParams& params);

ModelParams params_from_vector(const ModelSpec& spec, std::span<const double> values);
std::vector<double> params_to_vector(const ModelSpec& spec, const ModelParams& params);

struct ClusterAssignment {
  std::vector<int> membership;  // id -> cluster in 0..K-1
  std::vector<Point> centroids;
  int K = 0;

  // Centroids are the member means.
  static ClusterAssignment from_labels(const Population& pop, std::vector<int> labels);
  // Throws ValidationError if sizes or labels are inconsistent with n individuals.
  void validate(std::size_t n) const;
  // Every cluster index 0..K-1 has at least one member.
  bool all_occupied() const;
};

// Spark term for cluster k, given the infectious count of every cluster and
// the distances from k to every cluster (static or infectious centroids).
// Summation runs over k' in ascending order.
double spark_for_cluster(SparkKind spark, const ModelParams& params, int k, std::span<const int> counts,
                         std::span<const double> distances_from_k);

// Direct evaluation from a timeline. These are the reference paths; bulk
// evaluation goes through LikelihoodEvaluator.
double spark_rate(int id, Day t, const CompartmentTimeline& timeline, const ModelParams& params,
                  const Population& pop, const ClusterAssignment* clusters, const ModelSpec& spec);
double infectivity_rate(int id, Day t, const CompartmentTimeline& timeline, const ModelParams& params,
                        const Population& pop, const DistanceMatrix& dist, const ClusterAssignment* clusters,
                        const ModelSpec& spec);

// 1 - exp(-rate). Throws DomainError for negative rates.
double infection_probability(double rate);
// log(1 - exp(-rate)); -inf at rate 0.
double log_infection_probability(double rate);

// Precomputed (cluster, day) blocks of susceptible units with packed log
// distances to that block's infectious set. Kernel sums depend only on beta,
// so callers updating other parameters can reuse them.
class LikelihoodEvaluator {
 public:
  struct Unit {
    int id;
    Day t;
    bool infected;  // onset at t + 1
  };

  // `workers` <= 0 uses the OpenMP default.
  LikelihoodEvaluator(const Population& pop, const EpidemicRecord& record, const ModelSpec& spec,
                      const DistanceMatrix& dist, const ClusterAssignment* clusters = nullptr, int workers = 0);

  const ModelSpec& spec() const { return spec_; }
  std::size_t unit_count() const { return units_.size(); }
  std::span<const Unit> units() const { return units_; }
  std::size_t block_count() const { return blocks_.size(); }
  // Sum over blocks of susceptible x infectious pairs: the kernel workload.
  std::size_t kernel_pairs() const { return log_dist_.size(); }
  Day first_day() const { return t_first_; }
  int workers() const { return workers_; }

  std::vector<double> kernel_sums(double beta) const;
  void kernel_sums(double beta, std::span<double> out) const;

  double log_likelihood(const ModelParams& params) const;
  double log_likelihood(const ModelParams& params, std::span<const double> sums) const;
  // One log Bernoulli term per unit, in units() order.
  void pointwise(const ModelParams& params, std::span<const double> sums, std::span<double> out) const;

 private:
  struct Block {
    int cluster;
    Day t;
    std::size_t unit_begin;
    std::size_t unit_end;
    std::size_t n_infectious;
    std::size_t dist_offset;
  };

  void block_sparks(const ModelParams& params, std::vector<double>& out) const;
  double unit_term(const Unit& u, double rate) const;

  ModelSpec spec_;
  int workers_ = 0;
  int K_ = 1;
  Day t_first_ = 0;
  Day t_end_ = 0;  // last modelled transition day + 1
  std::vector<Unit> units_;
  std::vector<Block> blocks_;
  std::vector<double> log_dist_;
  std::vector<int> counts_;               // [(t - t_first) * K + k]
  std::vector<double> centroid_dist_;     // K x K
  std::vector<double> inf_centroid_dist_; // [(t - t_first) * K * K + k * K + k'], M3 only
};

// Full model when clusters is null or spec.composite is false.
double log_likelihood(const EpidemicRecord& record, const ModelParams& params, const ModelSpec& spec,
                      const Population& pop, const DistanceMatrix& dist,
                      const ClusterAssignment* clusters = nullptr, int workers = 0);
double composite_log_likelihood(const EpidemicRecord& record, const ModelParams& params, const ModelSpec& spec,
                                const Population& pop, const DistanceMatrix& dist,
                                const ClusterAssignment& clusters, int workers = 0);

}  // namespace cilm
