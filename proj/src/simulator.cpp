#include "cilm/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <utility>

#include "cilm/errors.hpp"
#include "cilm/simd/kernels.hpp"

namespace cilm {

SpatialScenario SpatialScenario::csr(double lower, double upper) {
  return SpatialScenario{Kind::CSR, 1, 0.0, lower, upper};
}

SpatialScenario SpatialScenario::clustered(int clusters, double variance, double lower, double upper) {
  return SpatialScenario{Kind::Clustered, clusters, variance, lower, upper};
}

std::string SpatialScenario::name() const {
  if (kind == Kind::CSR) return "csr";
  std::ostringstream os;
  if (variance == 3.0) os << "lowvar";
  else if (variance == 8.0) os << "highvar";
  else os << "var" << variance;
  os << "_k" << clusters;
  return os.str();
}

void SpatialScenario::validate() const {
  if (!(upper > lower)) throw ValidationError("scenario bounds must satisfy lower < upper");
  if (kind == Kind::Clustered) {
    if (clusters < 1) throw ValidationError("clustered scenario needs K >= 1");
    if (!(variance > 0.0)) throw ValidationError("clustered scenario needs variance > 0");
  }
}

std::vector<SpatialScenario> study_scenarios() {
  std::vector<SpatialScenario> out{SpatialScenario::csr()};
  for (double v : {3.0, 8.0}) {
    for (int k : {3, 5, 8}) out.push_back(SpatialScenario::clustered(k, v));
  }
  return out;
}

GeneratedPopulation generate_population(const SpatialScenario& scenario, int n, Rng& rng) {
  scenario.validate();
  if (n < 1) throw ValidationError("population size must be >= 1");
  std::vector<Point> pts;
  std::vector<int> labels;
  std::set<std::pair<double, double>> seen;
  pts.reserve(static_cast<std::size_t>(n));
  labels.reserve(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> unif(scenario.lower, scenario.upper);

  if (scenario.kind == SpatialScenario::Kind::CSR) {
    while (static_cast<int>(pts.size()) < n) {
      const double x = unif(rng);
      const double y = unif(rng);
      if (!seen.emplace(x, y).second) continue;
      pts.push_back({x, y});
      labels.push_back(0);
    }
    return {Population(std::move(pts)), std::move(labels)};
  }

  const int K = scenario.clusters;
  std::vector<Point> means(static_cast<std::size_t>(K));
  for (auto& m : means) {
    m.x = unif(rng);
    m.y = unif(rng);
  }
  const double sd = std::sqrt(scenario.variance);
  for (int k = 0; k < K; ++k) {
    const int size = n / K + (k < n % K ? 1 : 0);
    for (int m = 0; m < size;) {
      const double x = normal(rng, means[static_cast<std::size_t>(k)].x, sd);
      const double y = normal(rng, means[static_cast<std::size_t>(k)].y, sd);
      if (!seen.emplace(x, y).second) continue;
      pts.push_back({x, y});
      labels.push_back(k);
      ++m;
    }
  }
  return {Population(std::move(pts)), std::move(labels)};
}

EpidemicSimulator::EpidemicSimulator(const Population& pop, const DistanceMatrix& dist, const ModelSpec& spec,
                                     const ClusterAssignment* clusters)
    : pop_(pop), spec_(spec), clusters_(clusters) {
  if (spark_needs_clusters(spec_.spark) && !spec_.composite) {
    throw UsageError("spark '" + std::string(spark_name(spec_.spark)) + "' requires the composite model");
  }
  const std::size_t n = pop.size();
  if (dist.size() != n) throw ValidationError("distance matrix does not match population");
  if (spec_.composite) {
    if (clusters_ == nullptr) throw UsageError("composite simulation requires a cluster assignment");
    clusters_->validate(n);
    K_ = clusters_->K;
    const auto K = static_cast<std::size_t>(K_);
    centroid_dist_.resize(K * K);
    for (std::size_t a = 0; a < K; ++a) {
      for (std::size_t b = 0; b < K; ++b) {
        centroid_dist_[a * K + b] = std::hypot(clusters_->centroids[a].x - clusters_->centroids[b].x,
                                               clusters_->centroids[a].y - clusters_->centroids[b].y);
      }
    }
  }
  log_dist_.resize(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) log_dist_[i * n + j] = i == j ? 0.0 : std::log(dist(i, j));
  }
}

void EpidemicSimulator::advance(const ModelParams& params, State& st, Day from, Day t_max, int infectious_period,
                                int latent_period, Rng& rng) const {
  if (!(params.alpha >= 0.0) || !(params.beta > 0.0)) throw DomainError("simulation needs alpha >= 0, beta > 0");
  if (infectious_period < 1) throw ValidationError("infectious_period must be >= 1");
  if (latent_period < 0) throw ValidationError("latent_period must be >= 0");
  if (spark_needs_clusters(spec_.spark) && !params.beta_tilde) throw DomainError("spark needs beta_tilde");
  if ((spec_.spark == SparkKind::Constant || spec_.spark == SparkKind::M1) && !params.epsilon) {
    throw DomainError("spark needs epsilon");
  }
  if (spec_.spark == SparkKind::M4 && !params.delta) throw DomainError("spark needs delta");
  const std::size_t n = pop_.size();
  const auto K = static_cast<std::size_t>(K_);
  std::vector<double> kernel(n * n);
  simd::power_kernel_fill(log_dist_, params.beta, kernel);

  std::vector<int> counts(K);
  std::vector<Point> inf_sum(K);
  std::vector<double> spark(K);
  std::vector<double> d(K);
  std::vector<std::vector<int>> infectious(K);

  for (Day t = from; t < t_max; ++t) {
    std::fill(counts.begin(), counts.end(), 0);
    std::fill(inf_sum.begin(), inf_sum.end(), Point{});
    for (auto& v : infectious) v.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (st.onset[j] >= 0 && st.i_entry[j] <= t && t < st.r_entry[j]) {
        const auto k = spec_.composite ? static_cast<std::size_t>(clusters_->membership[j]) : 0;
        infectious[k].push_back(static_cast<int>(j));
        ++counts[k];
        inf_sum[k].x += pop_[j].x;
        inf_sum[k].y += pop_[j].y;
      }
    }
    for (std::size_t k = 0; k < K; ++k) {
      if (spec_.spark == SparkKind::M3) {
        for (std::size_t kp = 0; kp < K; ++kp) {
          if (counts[kp] == 0) {
            d[kp] = 0.0;
            continue;
          }
          const Point a = counts[k] == 0 ? clusters_->centroids[k]
                                         : Point{inf_sum[k].x / counts[k], inf_sum[k].y / counts[k]};
          d[kp] = std::hypot(a.x - inf_sum[kp].x / counts[kp], a.y - inf_sum[kp].y / counts[kp]);
        }
      } else if (spec_.composite) {
        std::copy_n(centroid_dist_.begin() + static_cast<std::ptrdiff_t>(k * K), K, d.begin());
      }
      spark[k] = spark_for_cluster(spec_.spark, params, static_cast<int>(k), counts, d);
    }

    // One draw per susceptible per day, ascending id, on a single stream.
    for (std::size_t i = 0; i < n; ++i) {
      if (st.onset[i] >= 0) continue;
      const auto k = spec_.composite ? static_cast<std::size_t>(clusters_->membership[i]) : 0;
      double sum = 0.0;
      const double* row = kernel.data() + i * n;
      for (int j : infectious[k]) sum += row[j];
      const double rate = params.alpha * sum + spark[k];
      if (!std::isfinite(rate)) throw NumericalError(static_cast<int>(i), t, "non-finite infection rate");
      const double p = -std::expm1(-rate);
      if (uniform01(rng) < p) {
        st.onset[i] = t + 1;
        st.i_entry[i] = t + 1 + latent_period;
        st.r_entry[i] = st.i_entry[i] + infectious_period;
      }
    }
  }
}

EpidemicRecord EpidemicSimulator::to_record(const State& st, Day t_max, Day observe_from) {
  const std::size_t n = st.onset.size();
  std::vector<std::optional<Day>> inf(n);
  std::vector<std::optional<Day>> rem(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (st.onset[i] < 0 || st.onset[i] > t_max) continue;
    inf[i] = st.onset[i];
    if (st.r_entry[i] <= t_max) rem[i] = st.r_entry[i];
  }
  return EpidemicRecord(std::move(inf), std::move(rem), t_max, observe_from);
}

EpidemicRecord EpidemicSimulator::run(const ModelParams& params, Day t_max, int infectious_period,
                                      int latent_period, int initial_count, Rng& rng) const {
  const std::size_t n = pop_.size();
  if (t_max < 1) throw ValidationError("t_max must be >= 1");
  if (initial_count < 1 || static_cast<std::size_t>(initial_count) > n) {
    throw ValidationError("initial_count must lie in [1, n]");
  }
  State st{std::vector<int>(n, -1), std::vector<int>(n, 0), std::vector<int>(n, 0)};
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  for (int c = 0; c < initial_count; ++c) {
    std::uniform_int_distribution<std::size_t> pick(static_cast<std::size_t>(c), n - 1);
    std::swap(ids[static_cast<std::size_t>(c)], ids[pick(rng)]);
    const auto i = static_cast<std::size_t>(ids[static_cast<std::size_t>(c)]);
    st.onset[i] = 0;
    st.i_entry[i] = latent_period;
    st.r_entry[i] = latent_period + infectious_period;
  }
  advance(params, st, 0, t_max, infectious_period, latent_period, rng);
  return to_record(st, t_max, 0);
}

EpidemicRecord EpidemicSimulator::continue_from(const ModelParams& params, const EpidemicRecord& observed,
                                                Day from_t, Day t_max, int infectious_period, int latent_period,
                                                Rng& rng) const {
  const std::size_t n = pop_.size();
  if (observed.size() != n) throw ValidationError("observed record does not match population");
  if (from_t < 0 || from_t > t_max) throw ValidationError("forecast start must lie in [0, t_max]");
  State st{std::vector<int>(n, -1), std::vector<int>(n, 0), std::vector<int>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& inf = observed.infection(i);
    if (!inf || *inf > from_t) continue;
    st.onset[i] = *inf;
    st.i_entry[i] = *inf + latent_period;
    const auto& rem = observed.removal(i);
    st.r_entry[i] = (rem && *rem <= from_t) ? *rem : st.i_entry[i] + infectious_period;
  }
  advance(params, st, from_t, t_max, infectious_period, latent_period, rng);
  return to_record(st, t_max, observed.observe_from());
}

EpidemicRecord simulate_epidemic(const Population& pop, const SimConfig& config, const ClusterAssignment* clusters) {
  const DistanceMatrix dist = pairwise_distances(pop);
  const EpidemicSimulator sim(pop, dist, config.spec, clusters);
  Rng rng(config.seed);
  return sim.run(config.params, config.t_max, config.infectious_period, 0, config.initial_count, rng);
}

EpidemicRecord simulate_seir(const Population& pop, const SimConfig& config, const ClusterAssignment* clusters) {
  if (config.latent_period < 1) throw ValidationError("SEIR simulation requires latent_period >= 1");
  const DistanceMatrix dist = pairwise_distances(pop);
  const EpidemicSimulator sim(pop, dist, config.spec, clusters);
  Rng rng(config.seed);
  return sim.run(config.params, config.t_max, config.infectious_period, config.latent_period,
                 config.initial_count, rng);
}

}  // namespace cilm
