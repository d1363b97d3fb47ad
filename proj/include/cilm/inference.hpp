#pragma once

// Bayesian fitting of basic and composite spatial ILMs by adaptive
// random-walk Metropolis-within-Gibbs.

#include <cstdint>
#include <string>
#include <vector>

#include "cilm/core.hpp"
#include "cilm/ilm.hpp"

namespace cilm {

struct GammaPrior {
  double shape = 1.0;
  double rate = 1.0;
};

struct NormalPrior {
  double mean = 0.0;
  double sd = 1.0;
};

struct PriorSpec {
  GammaPrior alpha{1.5, 1.0};
  GammaPrior beta{2.0, 3.0};
  GammaPrior beta_tilde{2.0, 3.0};
  GammaPrior epsilon{1.5, 1.0};
  NormalPrior delta{1.0, 1.0};

  // Throws ValidationError for non-positive shapes, rates or sd.
  void validate() const;
};

double gamma_log_density(double x, const GammaPrior& p);
double normal_log_density(double x, const NormalPrior& p);

// Sum over the parameters present in `params`; -inf outside the support.
double log_prior(const ModelParams& params, const PriorSpec& priors);

struct McmcConfig {
  int iterations = 2000;
  int burn_in = -1;  // < 0 means iterations / 2
  std::uint64_t seed = 1;
  double target_acceptance = 0.44;
  int workers = 0;

  int resolved_burn_in() const { return burn_in < 0 ? iterations / 2 : burn_in; }
};

struct McmcTrace {
  std::vector<std::string> names;
  std::vector<std::vector<double>> draws;  // iteration x parameter
  std::vector<double> log_post;
  std::vector<double> acceptance;  // post-burn-in, per parameter
  std::vector<double> step_sizes;  // frozen proposal scales
  std::uint64_t seed = 0;
  int burn_in = 0;

  std::size_t size() const { return draws.size(); }
  std::size_t column(const std::string& name) const;
  // Post-burn-in samples of one parameter.
  std::vector<double> samples(const std::string& name) const;
};

// One block per parameter; positive parameters move on the log scale, delta
// on the real line. Initial values are prior draws (delta starts at 1).
// Proposals whose likelihood is -inf or numerically non-finite are rejected.
McmcTrace fit_mcmc(const LikelihoodEvaluator& evaluator, const PriorSpec& priors, const McmcConfig& config);

McmcTrace fit_mcmc(const EpidemicRecord& record, const Population& pop, const ModelSpec& spec,
                   const ClusterAssignment* clusters, const PriorSpec& priors, const McmcConfig& config);

struct ParameterDiagnostics {
  std::string name;
  double acceptance = 0.0;
  double rhat = 1.0;
  bool flagged = false;  // rhat > 1.1
};

// Split-half potential scale reduction over a sample sequence. Two constant
// halves with the same value give 1.
double split_rhat(std::span<const double> samples);

// Requires at least 4 post-burn-in draws.
std::vector<ParameterDiagnostics> diagnostics(const McmcTrace& trace);

}  // namespace cilm
