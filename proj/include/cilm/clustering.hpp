#pragma once

// Population partitioning: Lloyd's K-means on coordinates and a truncated
// stick-breaking Dirichlet process mixture over (x, y, infection time).

#include <optional>
#include <span>
#include <vector>

#include "cilm/core.hpp"
#include "cilm/ilm.hpp"
#include "cilm/random.hpp"

namespace cilm {

// k-means++ seeding, then Lloyd iterations until assignments stop changing or
// max_iters. Nearest-centroid ties go to the lowest index; a cluster that
// empties is re-seeded with the point farthest from its current centroid.
ClusterAssignment kmeans(const Population& pop, int K, Rng& rng, int max_iters = 100);

double within_cluster_ss(const Population& pop, const ClusterAssignment& a);

struct StandardizedData {
  std::vector<double> x;
  std::vector<double> y;
  std::vector<int> t;  // 0 = never infected
  double t_min = 0.0;
  double t_max = 0.0;
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  std::size_t size() const { return x.size(); }
  Point to_original(double sx, double sy) const;
};

// Coordinates are rescaled affinely onto [t_min, t_max] (defaults: 0 and the
// record's t_max). Never-infected individuals get t = 0; infections recorded
// on day 0 are coded 1 so that 0 keeps its hurdle meaning.
StandardizedData standardize(const Population& pop, const EpidemicRecord& record,
                             std::optional<double> t_min = std::nullopt, std::optional<double> t_max = std::nullopt);

// log NB(t | mu, phi) in the mean/dispersion form with a gamma-function
// binomial coefficient.
double nb_logpmf(int t, double mu, double phi);
// Hurdle NB: log(theta) at t = 0, otherwise the zero-truncated NB scaled by 1 - theta.
double hurdle_nb_logpmf(int t, double theta, double mu, double phi);

// pi_1 = U_1, pi_m = U_m * prod_{j<m} (1 - U_j); U.back() must be 1.
std::vector<double> stick_breaking_weights(std::span<const double> U);

struct DpmmState {
  std::vector<int> g;  // 0-based component per individual
  std::vector<double> cx, cy, ct;
  std::vector<double> theta;
  double omega_x = 1.0;
  double omega_y = 1.0;
  double phi = 1.0;
  std::vector<double> U;
  std::vector<double> pi;
  double gamma = 1.0;

  int occupied() const;
};

struct DpmmConfig {
  int components = 30;
  int iterations = 2000;
  int burn_in = 1000;
  // false drops the infection-time factor (spatial-only clustering).
  bool temporal = true;
};

// Closed-form conditional draws used inside a sweep. Exposed for testing.
namespace dpmm {
// c | . ~ Normal(mean(values), omega^2 / n); prior draw U(lo, hi) when empty.
double draw_spatial_mean(Rng& rng, std::span<const double> values, double omega, double lo, double hi);
// theta | . ~ Beta(n0 + 2, npos + 2).
double draw_theta(Rng& rng, int n_zero, int n_positive);
// U_m | . ~ Beta(n_m + 1, gamma + sum_{j>m} n_j) for m < M - 1; U_{M-1} = 1.
std::vector<double> draw_sticks(Rng& rng, std::span<const int> sizes, double gamma);
// gamma | U ~ Gamma(M, 2 - sum_{m<M} log(1 - U_m)), shape/rate.
double draw_gamma(Rng& rng, std::span<const double> U);
}  // namespace dpmm

// Full chain, one state per sweep (burn-in included).
std::vector<DpmmState> dpmm_gibbs(const StandardizedData& data, const DpmmConfig& config, Rng& rng);

// Marginal posterior mode of each g_n over the post-burn-in sweeps (ties to
// the lowest label), labels compacted to 0..K-1 in ascending order, centroids
// are posterior medians of (cx, cy) mapped back to original units.
ClusterAssignment extract_assignment(std::span<const DpmmState> chain, int burn_in, const StandardizedData& data);

}  // namespace cilm
