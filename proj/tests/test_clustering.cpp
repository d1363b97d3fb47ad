#include <cmath>
#include <numeric>

#include "cilm/clustering.hpp"
#include "cilm/errors.hpp"
#include "cilm/simulator.hpp"
#include "doctest.h"

using namespace cilm;

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

template <class F>
Moments moments(int n, F&& draw) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = draw();
  Moments m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= (n - 1);
  return m;
}

EpidemicRecord empty_record(std::size_t n, Day t_max) {
  return EpidemicRecord(std::vector<std::optional<Day>>(n), std::vector<std::optional<Day>>(n), t_max);
}

}  // namespace

TEST_CASE("kmeans separable clusters") {
  const Population pop({{0, 0}, {0, 1}, {10, 10}, {10, 11}});
  Rng rng(1);
  const auto a = kmeans(pop, 2, rng);
  REQUIRE(a.K == 2);
  CHECK(a.membership[0] == a.membership[1]);
  CHECK(a.membership[2] == a.membership[3]);
  CHECK(a.membership[0] != a.membership[2]);
  const auto& c0 = a.centroids[static_cast<std::size_t>(a.membership[0])];
  const auto& c1 = a.centroids[static_cast<std::size_t>(a.membership[2])];
  CHECK(c0.x == 0.0);
  CHECK(c0.y == 0.5);
  CHECK(c1.x == 10.0);
  CHECK(c1.y == 10.5);
}

TEST_CASE("kmeans edge cases") {
  const Population pop({{0, 0}, {2, 0}, {4, 3}, {1, 5}});
  Rng rng(2);
  const auto one = kmeans(pop, 1, rng);
  CHECK(one.centroids[0].x == doctest::Approx(1.75));
  CHECK(one.centroids[0].y == doctest::Approx(2.0));
  const auto all = kmeans(pop, 4, rng);
  CHECK(all.all_occupied());
  CHECK(within_cluster_ss(pop, all) == 0.0);
  CHECK_THROWS_AS(kmeans(pop, 5, rng), ValidationError);
}

TEST_CASE("kmeans with K = 10 leaves no cluster empty") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto g = generate_population(SpatialScenario::clustered(3, 3.0), 100, rng);
    const auto a = kmeans(g.population, 10, rng);
    CHECK(a.K == 10);
    CHECK(a.all_occupied());
  }
}

TEST_CASE("standardize") {
  const Population pop({{0, 5}, {30, 0}, {60, 10}});
  const EpidemicRecord rec({0, 4, {}}, {{}, {}, {}}, 30);
  const auto s = standardize(pop, rec);
  CHECK(s.x[1] == doctest::Approx(15.0));
  CHECK(s.x[0] == 0.0);
  CHECK(s.x[2] == 30.0);
  CHECK(s.y[1] == 0.0);
  CHECK(s.y[2] == 30.0);
  CHECK(s.t[0] == 1);
  CHECK(s.t[1] == 4);
  CHECK(s.t[2] == 0);
  const Point back = s.to_original(s.x[1], s.y[0]);
  CHECK(back.x == doctest::Approx(30.0));
  CHECK(back.y == doctest::Approx(5.0));
  CHECK_THROWS_AS(standardize(Population({{1, 0}, {1, 2}}), empty_record(2, 30)), ValidationError);
}

TEST_CASE("hurdle negative binomial") {
  CHECK(hurdle_nb_logpmf(0, 0.3, 2.0, 1.0) == doctest::Approx(std::log(0.3)));
  CHECK(hurdle_nb_logpmf(1, 0.5, 2.0, 1.0) == doctest::Approx(std::log(1.0 / 6.0)).epsilon(1e-14));
  CHECK_THROWS_AS(hurdle_nb_logpmf(1, 1.0, 2.0, 1.0), DomainError);
  CHECK_THROWS_AS(hurdle_nb_logpmf(1, 0.5, 0.0, 1.0), DomainError);
  CHECK_THROWS_AS(hurdle_nb_logpmf(1, 0.5, 2.0, -1.0), DomainError);
  // NB(t | mu, phi) direct from the gamma-function form.
  for (int t : {0, 1, 5, 17}) {
    const double mu = 3.5, phi = 0.7;
    const double direct = std::lgamma(t + phi) - std::lgamma(phi) - std::lgamma(t + 1.0) +
                          t * std::log(mu / (mu + phi)) + phi * std::log(phi / (mu + phi));
    CHECK(nb_logpmf(t, mu, phi) == doctest::Approx(direct).epsilon(1e-13));
  }
}

TEST_CASE("stick breaking") {
  const std::vector<double> U{0.5, 0.4, 1.0};
  const auto pi = stick_breaking_weights(U);
  CHECK(pi[0] == doctest::Approx(0.5));
  CHECK(pi[1] == doctest::Approx(0.2));
  CHECK(pi[2] == doctest::Approx(0.3));
  CHECK_THROWS_AS(stick_breaking_weights(std::vector<double>{0.5, 0.5}), DomainError);
}

TEST_CASE("conjugate draws have the analytic moments") {
  Rng rng(10);
  const int n = 10000;
  {
    const std::vector<double> xs{1.0, 3.0};
    const auto m = moments(n, [&] { return dpmm::draw_spatial_mean(rng, xs, 1.0, 0.0, 30.0); });
    CHECK(std::abs(m.mean - 2.0) < 3 * std::sqrt(0.5 / n));
    CHECK(std::abs(m.var - 0.5) < 3 * 0.5 * std::sqrt(2.0 / (n - 1)));
  }
  {
    const auto m = moments(n, [&] { return dpmm::draw_theta(rng, 3, 7); });
    const double a = 5, b = 9, mean = a / (a + b), var = a * b / ((a + b) * (a + b) * (a + b + 1));
    CHECK(std::abs(m.mean - mean) < 3 * std::sqrt(var / n));
  }
  {
    const std::vector<double> U(30, 1.0 - std::exp(-10.0 / 29.0));
    std::vector<double> Ufull = U;
    Ufull.back() = 1.0;
    const auto m = moments(n, [&] { return dpmm::draw_gamma(rng, Ufull); });
    CHECK(std::abs(m.mean - 30.0 / 12.0) < 3 * std::sqrt(30.0 / 144.0 / n));
  }
}

TEST_CASE("dpmm finds two well separated blobs") {
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Rng rng(seed);
    std::vector<Point> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({5 + normal(rng, 0, 0.7), 5 + normal(rng, 0, 0.7)});
    for (int i = 0; i < 30; ++i) pts.push_back({25 + normal(rng, 0, 0.7), 25 + normal(rng, 0, 0.7)});
    const Population pop(pts);
    const auto data = standardize(pop, empty_record(pop.size(), 30));
    DpmmConfig cfg;
    cfg.iterations = 600;
    cfg.burn_in = 300;
    cfg.temporal = false;
    const auto chain = dpmm_gibbs(data, cfg, rng);
    const auto a = extract_assignment(chain, cfg.burn_in, data);
    if (a.K != 2) continue;
    bool near = true;
    for (const auto& c : a.centroids) {
      const double d5 = std::hypot(c.x - 5, c.y - 5), d25 = std::hypot(c.x - 25, c.y - 25);
      near = near && std::min(d5, d25) < 1.0;
    }
    ok += near;
  }
  CHECK(ok >= 9);
}

TEST_CASE("extraction from a constant chain") {
  const Population pop({{0, 0}, {1, 1}, {2, 0}});
  const auto data = standardize(pop, empty_record(3, 30));
  DpmmState s;
  s.g = {7, 7, 7};
  s.cx.assign(30, 15.0);
  s.cy.assign(30, 15.0);
  std::vector<DpmmState> chain(4, s);
  const auto a = extract_assignment(chain, 1, data);
  CHECK(a.K == 1);
  CHECK(a.membership == std::vector<int>{0, 0, 0});
  s.g = {3, 1, 3};
  std::vector<DpmmState> chain2(4, s);
  const auto b = extract_assignment(chain2, 2, data);
  CHECK(b.K == 2);
  CHECK(b.membership == std::vector<int>{1, 0, 1});
  CHECK_THROWS(extract_assignment(std::vector<DpmmState>{}, 0, data));
}

TEST_CASE("dpmm states keep normalised weights") {
  Rng rng(12);
  const auto g = generate_population(SpatialScenario::clustered(3, 3.0), 40, rng);
  SimConfig cfg;
  const auto rec = simulate_epidemic(g.population, cfg);
  const auto data = standardize(g.population, rec);
  DpmmConfig dc;
  dc.iterations = 50;
  dc.burn_in = 25;
  const auto chain = dpmm_gibbs(data, dc, rng);
  CHECK(chain.size() == 50);
  for (const auto& s : chain) {
    CHECK(s.pi.size() == 30);
    CHECK(std::abs(std::accumulate(s.pi.begin(), s.pi.end(), 0.0) - 1.0) < 1e-12);
    CHECK(s.U.back() == 1.0);
    CHECK(s.omega_x > 0);
    CHECK(s.phi > 0);
    for (double th : s.theta) {
      CHECK(th > 0);
      CHECK(th < 1);
    }
  }
}
