#include "cilm/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cilm/errors.hpp"
#include "cilm/random.hpp"
#include "cilm/simulator.hpp"

namespace cilm {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<std::size_t> draw_rows(const McmcTrace& trace, int n_sims) {
  const auto begin = static_cast<std::size_t>(trace.burn_in);
  if (trace.draws.size() <= begin) throw ValidationError("trace has no post-burn-in draws");
  const std::size_t avail = trace.draws.size() - begin;
  std::vector<std::size_t> rows(static_cast<std::size_t>(n_sims));
  for (std::size_t m = 0; m < rows.size(); ++m) rows[m] = begin + (m * avail) / rows.size();
  return rows;
}

CurveEnsemble summarise(std::vector<std::vector<int>> curves, Day from, double mass) {
  CurveEnsemble out;
  out.from = from;
  const std::size_t days = curves.empty() ? 0 : curves.front().size();
  std::vector<double> column(curves.size());
  for (std::size_t d = 0; d < days; ++d) {
    for (std::size_t m = 0; m < curves.size(); ++m) column[m] = curves[m][d];
    const Interval iv = hpdi(column, mass);
    std::sort(column.begin(), column.end());
    const std::size_t n = column.size();
    const double med = n % 2 == 1 ? column[n / 2] : 0.5 * (column[n / 2 - 1] + column[n / 2]);
    out.lower.push_back(iv.lower);
    out.median.push_back(std::clamp(med, iv.lower, iv.upper));
    out.upper.push_back(iv.upper);
  }
  out.curves = std::move(curves);
  return out;
}

void check_ppd(const PpdConfig& config) {
  if (config.n_sims < 20) throw ValidationError("posterior predictive ensemble needs n_sims >= 20");
  if (config.infectious_period < 1) throw ValidationError("infectious_period must be >= 1");
  if (config.latent_period < 0) throw ValidationError("latent_period must be >= 0");
}

std::vector<int> curve_for(const EpidemicRecord& rec, const ModelSpec& spec, int latent, int period) {
  TimelineOptions opts = spec.timeline();
  if (opts.frame == Frame::SEIR) {
    opts.latent_period = latent;
    opts.infectious_period = period;
  }
  return incidence_curve(build_timeline(rec, opts));
}

CurveEnsemble run_ensemble(const McmcTrace& trace, const EpidemicRecord& record, const Population& pop,
                           const ModelSpec& spec, const ClusterAssignment* clusters, Day from_t,
                           const PpdConfig& config) {
  const int latent = spec.frame == Frame::SEIR ? config.latent_period : 0;
  const DistanceMatrix dist = pairwise_distances(pop);
  const EpidemicSimulator sim(pop, dist, spec, clusters);
  const auto rows = draw_rows(trace, config.n_sims);
  const Day t_max = record.t_max();
  const Day start = record.first_infection().value_or(0);
  std::vector<std::vector<int>> curves(rows.size());
  std::vector<std::string> errors(rows.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t m = 0; m < rows.size(); ++m) {
    try {
      Rng rng(derive_seed(config.seed, m));
      const ModelParams p = params_from_vector(spec, trace.draws[rows[m]]);
      const EpidemicRecord sim_rec =
          sim.continue_from(p, record, from_t < 0 ? start : from_t, t_max, config.infectious_period, latent, rng);
      auto full = curve_for(sim_rec, spec, latent, config.infectious_period);
      const Day lo = from_t < 0 ? 0 : from_t;
      curves[m].assign(full.begin() + lo, full.end());
    } catch (const std::exception& e) {
      errors[m] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericalError(-1, -1, "posterior predictive simulation failed: " + e);
  }
  return summarise(std::move(curves), from_t < 0 ? 0 : from_t, config.mass);
}

}  // namespace

PointwiseLogLik::PointwiseLogLik(std::size_t draws, std::size_t units)
    : draws_(draws), units_(units), values_(draws * units) {}

PointwiseLogLik::PointwiseLogLik(std::size_t draws, std::size_t units, std::vector<double> values)
    : draws_(draws), units_(units), values_(std::move(values)) {
  if (values_.size() != draws * units) throw ValidationError("pointwise matrix size mismatch");
}

PointwiseLogLik pointwise_loglik(const LikelihoodEvaluator& evaluator, const McmcTrace& trace) {
  const auto begin = static_cast<std::size_t>(trace.burn_in);
  if (trace.draws.size() <= begin) throw ValidationError("trace has no post-burn-in draws");
  const std::size_t D = trace.draws.size() - begin;
  PointwiseLogLik out(D, evaluator.unit_count());
  const ModelSpec& spec = evaluator.spec();
  std::vector<std::string> errors(D);

#pragma omp parallel for schedule(dynamic) num_threads(evaluator.workers())
  for (std::size_t d = 0; d < D; ++d) {
    try {
      const ModelParams p = params_from_vector(spec, trace.draws[begin + d]);
      const auto sums = evaluator.kernel_sums(p.beta);
      evaluator.pointwise(p, sums, out.row(d));
    } catch (const std::exception& e) {
      errors[d] = e.what();
    }
  }
  for (const auto& e : errors) {
    if (!e.empty()) throw NumericalError(-1, -1, "pointwise evaluation failed: " + e);
  }
  return out;
}

WaicResult waic(const PointwiseLogLik& pw) {
  const std::size_t D = pw.draws();
  if (D < 2) throw ValidationError("WAIC needs at least 2 posterior draws");
  WaicResult r;
  for (std::size_t u = 0; u < pw.units(); ++u) {
    double mx = kNegInf;
    for (std::size_t d = 0; d < D; ++d) mx = std::max(mx, pw(d, u));
    if (mx == kNegInf) throw DomainError("unit " + std::to_string(u) + " has probability 0 under every draw");
    double s = 0.0;
    for (std::size_t d = 0; d < D; ++d) s += std::exp(pw(d, u) - mx);
    r.lppd += mx + std::log(s / static_cast<double>(D));

    double mean = 0.0;
    for (std::size_t d = 0; d < D; ++d) mean += pw(d, u);
    mean /= static_cast<double>(D);
    double var = 0.0;
    if (std::isfinite(mean)) {
      for (std::size_t d = 0; d < D; ++d) var += (pw(d, u) - mean) * (pw(d, u) - mean);
      var /= static_cast<double>(D - 1);
    } else {
      var = std::numeric_limits<double>::infinity();
    }
    r.p_waic += var;
  }
  r.waic = -2.0 * (r.lppd - r.p_waic);
  return r;
}

Interval hpdi(std::span<const double> samples, double mass) {
  if (!(mass > 0.0) || mass > 1.0) throw ValidationError("HPDI mass must lie in (0, 1]");
  const std::size_t n = samples.size();
  if (n < 20) throw ValidationError("HPDI needs at least 20 samples");
  const auto w = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(n) - 1e-9));
  if (w < 1 || w > n) throw ValidationError("HPDI window does not fit the sample");
  std::vector<double> s(samples.begin(), samples.end());
  std::sort(s.begin(), s.end());
  std::size_t best = 0;
  double width = s[w - 1] - s[0];
  for (std::size_t i = 1; i + w <= n; ++i) {
    const double cand = s[i + w - 1] - s[i];
    if (cand < width) {
      width = cand;
      best = i;
    }
  }
  return {s[best], s[best + w - 1]};
}

double CurveEnsemble::coverage(std::span<const int> truth) const {
  if (days() == 0) return 1.0;
  std::size_t inside = 0;
  for (std::size_t k = 0; k < days(); ++k) {
    const std::size_t t = static_cast<std::size_t>(from) + k;
    if (t >= truth.size()) throw ValidationError("true curve is shorter than the ensemble");
    if (truth[t] >= lower[k] && truth[t] <= upper[k]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(days());
}

CurveEnsemble ppd_complete(const McmcTrace& trace, const EpidemicRecord& record, const Population& pop,
                           const ModelSpec& spec, const ClusterAssignment* clusters, const PpdConfig& config) {
  check_ppd(config);
  return run_ensemble(trace, record, pop, spec, clusters, -1, config);
}

CurveEnsemble ppd_forecast(const McmcTrace& trace, const EpidemicRecord& record, const Population& pop,
                           const ModelSpec& spec, const ClusterAssignment* clusters, Day from_t,
                           const PpdConfig& config) {
  check_ppd(config);
  if (from_t < 0 || from_t > record.t_max()) throw ValidationError("forecast start must lie in [0, t_max]");
  return run_ensemble(trace, record, pop, spec, clusters, from_t, config);
}

}  // namespace cilm
