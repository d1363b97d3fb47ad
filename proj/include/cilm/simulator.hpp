#pragma once

// Spatial population generators and forward simulation of SIR/SEIR epidemics
// under the basic or composite spatial ILM.

#include <cstdint>
#include <string>
#include <vector>

#include "cilm/core.hpp"
#include "cilm/ilm.hpp"
#include "cilm/random.hpp"

namespace cilm {

struct SpatialScenario {
  enum class Kind { CSR, Clustered };

  Kind kind = Kind::CSR;
  int clusters = 1;
  double variance = 3.0;  // per-axis variance of the Gaussian clusters
  double lower = 0.0;
  double upper = 30.0;

  static SpatialScenario csr(double lower = 0.0, double upper = 30.0);
  static SpatialScenario clustered(int clusters, double variance, double lower = 0.0, double upper = 30.0);

  // "csr", "lowvar_k3", "highvar_k8"; other variances print the value.
  std::string name() const;
  void validate() const;
};

// The seven scenarios of the simulation study: CSR, then low (3) and high (8)
// variance clustered populations with K = 3, 5, 8.
std::vector<SpatialScenario> study_scenarios();

struct GeneratedPopulation {
  Population population;
  std::vector<int> labels;  // generating cluster per id (all 0 for CSR)
};

// Clustered members are split as evenly as possible, cluster 0 first; Gaussian
// draws are not clipped to the bounds. Coincident points are redrawn.
GeneratedPopulation generate_population(const SpatialScenario& scenario, int n, Rng& rng);

struct SimConfig {
  Day t_max = 31;
  int infectious_period = 3;
  int latent_period = 0;  // days in E; 0 gives SIR dynamics
  int initial_count = 1;
  std::uint64_t seed = 1;
  ModelParams params{0.8, 2.0, {}, {}, {}};
  ModelSpec spec;
};

// Reusable simulator over a fixed population; log distances are cached.
class EpidemicSimulator {
 public:
  EpidemicSimulator(const Population& pop, const DistanceMatrix& dist, const ModelSpec& spec,
                    const ClusterAssignment* clusters = nullptr);

  // Initial infectives drawn uniformly without replacement, exposed/infectious at t = 0.
  EpidemicRecord run(const ModelParams& params, Day t_max, int infectious_period, int latent_period,
                     int initial_count, Rng& rng) const;

  // Continue from the compartment state of `observed` at day `from_t`.
  // Individuals infected by then keep their onset; removals not yet observed
  // are set from the fixed periods.
  EpidemicRecord continue_from(const ModelParams& params, const EpidemicRecord& observed, Day from_t, Day t_max,
                               int infectious_period, int latent_period, Rng& rng) const;

 private:
  struct State {
    std::vector<int> onset;    // -1 when susceptible
    std::vector<int> i_entry;  // may exceed t_max
    std::vector<int> r_entry;
  };

  void advance(const ModelParams& params, State& st, Day from, Day t_max, int infectious_period,
               int latent_period, Rng& rng) const;
  static EpidemicRecord to_record(const State& st, Day t_max, Day observe_from);

  const Population& pop_;
  ModelSpec spec_;
  const ClusterAssignment* clusters_;
  int K_ = 1;
  std::vector<double> log_dist_;  // N x N, diagonal unused
  std::vector<double> centroid_dist_;
};

// SIR epidemic from config.spec (frame ignored) with config.latent_period forced to 0.
EpidemicRecord simulate_epidemic(const Population& pop, const SimConfig& config,
                                 const ClusterAssignment* clusters = nullptr);
// SEIR epidemic; requires config.latent_period >= 1.
EpidemicRecord simulate_seir(const Population& pop, const SimConfig& config,
                             const ClusterAssignment* clusters = nullptr);

}  // namespace cilm
