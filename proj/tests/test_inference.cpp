#include <algorithm>
#include <cmath>

#include "cilm/errors.hpp"
#include "cilm/inference.hpp"
#include "cilm/random.hpp"
#include "cilm/simulator.hpp"
#include "doctest.h"

using namespace cilm;

namespace {

// Quantile of Gamma(shape, rate) by trapezoid integration of the density.
double gamma_quantile_grid(double shape, double rate, double q) {
  const int n = 200000;
  const double hi = 40.0 / rate;
  const double h = hi / n;
  double acc = 0.0, prev = 0.0;
  for (int i = 1; i <= n; ++i) {
    const double x = i * h;
    const double f = std::exp(shape * std::log(rate) - std::lgamma(shape) + (shape - 1) * std::log(x) - rate * x);
    const double step = 0.5 * (prev + f) * h;
    if (acc + step >= q) return x - h + h * (q - acc) / step;
    acc += step;
    prev = f;
  }
  return hi;
}

double empirical_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  return v[static_cast<std::size_t>(q * static_cast<double>(v.size() - 1))];
}

struct FlatData {
  Population pop{std::vector<Point>{{0, 0}}};
  EpidemicRecord rec{{0}, {3}, 10};
};

}  // namespace

TEST_CASE("log prior") {
  PriorSpec pr;
  const double a = gamma_log_density(1.0, pr.alpha);
  CHECK(a == doctest::Approx(-1.0 - std::lgamma(1.5)).epsilon(1e-14));
  CHECK(gamma_log_density(0.0, pr.alpha) == -INFINITY);
  CHECK(gamma_log_density(-1.0, pr.alpha) == -INFINITY);
  CHECK(log_prior({-0.1, 1.0, {}, {}, {}}, pr) == -INFINITY);
  const double at_mean = normal_log_density(1.0, pr.delta);
  for (double d : {-1.0, 0.5, 0.99, 1.01, 3.0}) CHECK(normal_log_density(d, pr.delta) < at_mean);
  const ModelParams p{1.0, 0.5, 0.2, 1.5, 0.7};
  CHECK(log_prior(p, pr) == doctest::Approx(gamma_log_density(1.0, pr.alpha) + gamma_log_density(0.5, pr.beta) +
                                             gamma_log_density(0.2, pr.epsilon) +
                                             gamma_log_density(1.5, pr.beta_tilde) +
                                             normal_log_density(0.7, pr.delta)));
  pr.beta.rate = 0.0;
  CHECK_THROWS_AS(pr.validate(), ValidationError);
}

TEST_CASE("mcmc is deterministic given the seed") {
  Rng rng(3);
  const auto g = generate_population(SpatialScenario::csr(), 40, rng);
  SimConfig sc;
  const auto rec = simulate_epidemic(g.population, sc);
  McmcConfig cfg;
  cfg.iterations = 200;
  cfg.seed = 11;
  const ModelSpec spec;
  const auto a = fit_mcmc(rec, g.population, spec, nullptr, PriorSpec{}, cfg);
  cfg.workers = 3;
  const auto b = fit_mcmc(rec, g.population, spec, nullptr, PriorSpec{}, cfg);
  REQUIRE(a.size() == 200);
  CHECK(a.draws == b.draws);
  CHECK(a.log_post == b.log_post);
  for (const auto& row : a.draws) {
    CHECK(row[0] > 0);
    CHECK(row[1] > 0);
  }
  CHECK(a.burn_in == 100);
  CHECK(a.samples("alpha").size() == 100);
  CHECK_THROWS_AS(a.column("delta"), UsageError);
}

TEST_CASE("flat likelihood recovers prior quantiles") {
  const FlatData d;
  const ModelSpec spec;
  McmcConfig cfg;
  cfg.iterations = 40000;
  cfg.seed = 5;
  const PriorSpec pr;
  const auto tr = fit_mcmc(d.rec, d.pop, spec, nullptr, pr, cfg);
  const auto alpha = tr.samples("alpha");
  const auto beta = tr.samples("beta");
  // Loose tolerance: the chain is autocorrelated so the effective size is
  // well below 20000.
  for (double q : {0.1, 0.5, 0.9}) {
    const double ga = gamma_quantile_grid(pr.alpha.shape, pr.alpha.rate, q);
    const double gb = gamma_quantile_grid(pr.beta.shape, pr.beta.rate, q);
    CHECK(empirical_quantile(alpha, q) == doctest::Approx(ga).epsilon(0.1));
    CHECK(empirical_quantile(beta, q) == doctest::Approx(gb).epsilon(0.1));
  }
  for (double acc : tr.acceptance) {
    CHECK(acc > 0.3);
    CHECK(acc < 0.6);
  }
}

TEST_CASE("composite m4 chains carry delta") {
  Rng rng(4);
  const auto g = generate_population(SpatialScenario::clustered(3, 3.0), 45, rng);
  const auto cl = ClusterAssignment::from_labels(g.population, g.labels);
  SimConfig sc;
  sc.spec.composite = true;
  sc.spec.spark = SparkKind::M2;
  sc.params = {0.8, 2.0, {}, 1.0, {}};
  const auto rec = simulate_epidemic(g.population, sc, &cl);
  ModelSpec spec = sc.spec;
  spec.spark = SparkKind::M4;
  McmcConfig cfg;
  cfg.iterations = 100;
  const auto tr = fit_mcmc(rec, g.population, spec, &cl, PriorSpec{}, cfg);
  CHECK(tr.names == std::vector<std::string>{"alpha", "beta", "beta_tilde", "delta"});
  CHECK(std::isfinite(tr.log_post.back()));
}

TEST_CASE("impossible initial point is rejected") {
  const Population pop({{0, 0}, {1, 0}});
  const EpidemicRecord rec({0, 2}, {1, {}}, 5);
  McmcConfig cfg;
  cfg.iterations = 10;
  CHECK_THROWS_AS(fit_mcmc(rec, pop, ModelSpec{}, nullptr, PriorSpec{}, cfg), ValidationError);
}

TEST_CASE("split rhat") {
  const std::vector<double> constant(100, 2.5);
  CHECK(split_rhat(constant) == 1.0);
  std::vector<double> disjoint(100);
  Rng rng(1);
  for (std::size_t i = 0; i < 100; ++i) disjoint[i] = (i < 50 ? 0.0 : 10.0) + uniform01(rng);
  CHECK(split_rhat(disjoint) > 5.0);
  std::vector<double> noise(10000);
  for (auto& x : noise) x = normal(rng, 0, 1);
  const double r = split_rhat(noise);
  CHECK(r >= 0.999);
  CHECK(r <= 1.05);
  CHECK_THROWS_AS(split_rhat(std::vector<double>{1, 2, 3}), ValidationError);

  McmcTrace tr;
  tr.names = {"alpha"};
  for (int i = 0; i < 40; ++i) tr.draws.push_back({i < 30 ? 1.0 : 9.0 + i});
  tr.burn_in = 20;
  tr.acceptance = {0.4};
  const auto d = diagnostics(tr);
  REQUIRE(d.size() == 1);
  CHECK(d[0].flagged);
}
