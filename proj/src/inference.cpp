#include "cilm/inference.hpp"

#include <cmath>
#include <limits>

#include "cilm/errors.hpp"
#include "cilm/random.hpp"

namespace cilm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

void PriorSpec::validate() const {
  for (const GammaPrior* g : {&alpha, &beta, &beta_tilde, &epsilon}) {
    if (!(g->shape > 0.0) || !(g->rate > 0.0)) throw ValidationError("gamma prior needs shape, rate > 0");
  }
  if (!(delta.sd > 0.0)) throw ValidationError("normal prior needs sd > 0");
}

double gamma_log_density(double x, const GammaPrior& p) {
  if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
  return p.shape * std::log(p.rate) - std::lgamma(p.shape) + (p.shape - 1.0) * std::log(x) - p.rate * x;
}

double normal_log_density(double x, const NormalPrior& p) {
  if (!std::isfinite(x)) return kNegInf;
  const double z = (x - p.mean) / p.sd;
  return -0.5 * z * z - std::log(p.sd) - 0.91893853320467274178;
}

double log_prior(const ModelParams& params, const PriorSpec& priors) {
  double lp = gamma_log_density(params.alpha, priors.alpha) + gamma_log_density(params.beta, priors.beta);
  if (params.beta_tilde) lp += gamma_log_density(*params.beta_tilde, priors.beta_tilde);
  if (params.epsilon) lp += gamma_log_density(*params.epsilon, priors.epsilon);
  if (params.delta) lp += normal_log_density(*params.delta, priors.delta);
  return lp;
}

std::size_t McmcTrace::column(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (names[k] == name) return k;
  }
  throw UsageError("trace has no parameter '" + name + "'");
}

std::vector<double> McmcTrace::samples(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  for (std::size_t it = static_cast<std::size_t>(burn_in); it < draws.size(); ++it) out.push_back(draws[it][c]);
  return out;
}

McmcTrace fit_mcmc(const LikelihoodEvaluator& evaluator, const PriorSpec& priors, const McmcConfig& config) {
  priors.validate();
  if (config.iterations < 1) throw ValidationError("MCMC needs at least one iteration");
  const ModelSpec& spec = evaluator.spec();
  const auto names = spec.parameter_names();
  const std::size_t P = names.size();
  const int burn_in = config.resolved_burn_in();
  Rng rng(config.seed);

  std::vector<double> x(P);
  for (std::size_t k = 0; k < P; ++k) {
    const std::string& n = names[k];
    if (n == "alpha") x[k] = gamma_rate(rng, priors.alpha.shape, priors.alpha.rate);
    else if (n == "beta") x[k] = gamma_rate(rng, priors.beta.shape, priors.beta.rate);
    else if (n == "beta_tilde") x[k] = gamma_rate(rng, priors.beta_tilde.shape, priors.beta_tilde.rate);
    else if (n == "epsilon") x[k] = gamma_rate(rng, priors.epsilon.shape, priors.epsilon.rate);
    else x[k] = 1.0;
  }
  const std::size_t beta_col = 1;

  std::vector<double> sums = evaluator.kernel_sums(x[beta_col]);
  std::vector<double> proposed_sums(sums.size());

  auto log_post = [&](const std::vector<double>& v, std::span<const double> ks) {
    const ModelParams p = params_from_vector(spec, v);
    const double lp = log_prior(p, priors);
    if (lp == kNegInf) return kNegInf;
    try {
      return lp + evaluator.log_likelihood(p, ks);
    } catch (const NumericalError&) {
      return kNegInf;
    }
  };

  double current = log_post(x, sums);
  if (current == kNegInf || std::isnan(current)) {
    throw ValidationError("initial point has zero posterior density; re-initialise (check that every "
                          "observed infection has a possible source under this model)");
  }

  std::vector<StepTuner> tuners;
  for (std::size_t k = 0; k < P; ++k) tuners.emplace_back(names[k] == "delta" ? 0.2 : 0.1, config.target_acceptance);

  McmcTrace trace;
  trace.names = names;
  trace.seed = config.seed;
  trace.burn_in = burn_in;
  trace.draws.reserve(static_cast<std::size_t>(config.iterations));
  trace.log_post.reserve(static_cast<std::size_t>(config.iterations));

  for (int it = 0; it < config.iterations; ++it) {
    if (it == burn_in) {
      for (auto& t : tuners) {
        t.freeze();
        t.reset_counts();
      }
    }
    for (std::size_t k = 0; k < P; ++k) {
      std::vector<double> y = x;
      const double z = normal(rng, 0.0, tuners[k].scale());
      // log-scale moves carry the Jacobian y/x in the acceptance ratio.
      double log_jacobian = 0.0;
      if (names[k] == "delta") {
        y[k] = x[k] + z;
      } else {
        y[k] = x[k] * std::exp(z);
        log_jacobian = z;
      }
      double proposed;
      if (k == beta_col) {
        if (!(y[k] > 0.0) || !std::isfinite(y[k])) {
          proposed = kNegInf;
        } else {
          evaluator.kernel_sums(y[k], proposed_sums);
          proposed = log_post(y, proposed_sums);
        }
      } else {
        proposed = log_post(y, sums);
      }
      const bool accept = proposed > kNegInf && std::log(uniform01(rng)) < proposed - current + log_jacobian;
      if (accept) {
        x = std::move(y);
        current = proposed;
        if (k == beta_col) std::swap(sums, proposed_sums);
      }
      tuners[k].record(accept);
    }
    trace.draws.push_back(x);
    trace.log_post.push_back(current);
  }
  for (const auto& t : tuners) {
    trace.acceptance.push_back(t.acceptance_rate());
    trace.step_sizes.push_back(t.scale());
  }
  return trace;
}

McmcTrace fit_mcmc(const EpidemicRecord& record, const Population& pop, const ModelSpec& spec,
                   const ClusterAssignment* clusters, const PriorSpec& priors, const McmcConfig& config) {
  const DistanceMatrix dist = pairwise_distances(pop);
  const LikelihoodEvaluator evaluator(pop, record, spec, dist, clusters, config.workers);
  return fit_mcmc(evaluator, priors, config);
}

double split_rhat(std::span<const double> samples) {
  const std::size_t n = samples.size() / 2;
  if (n < 2) throw ValidationError("split R-hat needs at least 4 samples");
  const std::span<const double> a = samples.subspan(0, n);
  const std::span<const double> b = samples.subspan(samples.size() - n, n);
  auto mean_var = [](std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::pair<double, double>{m, s / static_cast<double>(v.size() - 1)};
  };
  const auto [ma, va] = mean_var(a);
  const auto [mb, vb] = mean_var(b);
  const double W = 0.5 * (va + vb);
  const double grand = 0.5 * (ma + mb);
  const double B = static_cast<double>(n) * ((ma - grand) * (ma - grand) + (mb - grand) * (mb - grand));
  if (W == 0.0) return B == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double nd = static_cast<double>(n);
  const double var_plus = (nd - 1.0) / nd * W + B / nd;
  return std::sqrt(var_plus / W);
}

std::vector<ParameterDiagnostics> diagnostics(const McmcTrace& trace) {
  std::vector<ParameterDiagnostics> out;
  for (std::size_t k = 0; k < trace.names.size(); ++k) {
    const auto s = trace.samples(trace.names[k]);
    ParameterDiagnostics d;
    d.name = trace.names[k];
    d.acceptance = k < trace.acceptance.size() ? trace.acceptance[k] : 0.0;
    d.rhat = split_rhat(s);
    d.flagged = !(d.rhat <= 1.1);
    out.push_back(d);
  }
  return out;
}

}  // namespace cilm
