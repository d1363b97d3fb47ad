#include <cmath>
#include <map>

#include "cilm/errors.hpp"
#include "cilm/simulator.hpp"
#include "doctest.h"

using namespace cilm;

TEST_CASE("csr populations stay inside the square") {
  Rng rng(1);
  const auto g = generate_population(SpatialScenario::csr(), 100, rng);
  CHECK(g.population.size() == 100);
  for (const auto& p : g.population.points()) {
    CHECK(p.x >= 0.0);
    CHECK(p.x <= 30.0);
    CHECK(p.y >= 0.0);
    CHECK(p.y <= 30.0);
  }
}

TEST_CASE("clustered populations split evenly") {
  Rng rng(2);
  const auto g = generate_population(SpatialScenario::clustered(3, 3.0), 100, rng);
  std::map<int, int> counts;
  for (int l : g.labels) ++counts[l];
  CHECK(counts[0] == 34);
  CHECK(counts[1] == 33);
  CHECK(counts[2] == 33);
}

TEST_CASE("study scenarios") {
  const auto s = study_scenarios();
  REQUIRE(s.size() == 7);
  CHECK(s[0].name() == "csr");
  CHECK(s[1].name() == "lowvar_k3");
  CHECK(s[6].name() == "highvar_k8");
  CHECK_THROWS_AS(SpatialScenario::clustered(0, 3.0).validate(), ValidationError);
  CHECK_THROWS_AS(SpatialScenario::clustered(2, 0.0).validate(), ValidationError);
}

TEST_CASE("fixed seed gives identical populations and epidemics") {
  SimConfig cfg;
  cfg.seed = 42;
  Rng a(9), b(9);
  const auto ga = generate_population(SpatialScenario::clustered(5, 8.0), 60, a);
  const auto gb = generate_population(SpatialScenario::clustered(5, 8.0), 60, b);
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(ga.population[i].x == gb.population[i].x);
    CHECK(ga.population[i].y == gb.population[i].y);
  }
  const auto ra = simulate_epidemic(ga.population, cfg);
  const auto rb = simulate_epidemic(ga.population, cfg);
  for (std::size_t i = 0; i < 60; ++i) {
    CHECK(ra.infection(i) == rb.infection(i));
    CHECK(ra.removal(i) == rb.removal(i));
  }
}

TEST_CASE("alpha zero infects nobody beyond the initial infective") {
  Rng rng(3);
  const auto g = generate_population(SpatialScenario::csr(), 50, rng);
  SimConfig cfg;
  cfg.params = {0.0, 2.0, {}, {}, {}};
  const auto r = simulate_epidemic(g.population, cfg);
  CHECK(r.infected_count() == 1);
  cfg.latent_period = 2;
  CHECK(simulate_seir(g.population, cfg).infected_count() == 1);
}

TEST_CASE("single individual") {
  const Population pop({{1, 1}});
  SimConfig cfg;
  const auto r = simulate_epidemic(pop, cfg);
  CHECK(r.infected_count() == 1);
  CHECK(*r.infection(0) == 0);
}

TEST_CASE("every infected individual is infectious for exactly three days") {
  Rng rng(4);
  const auto g = generate_population(SpatialScenario::csr(), 100, rng);
  SimConfig cfg;
  cfg.seed = 8;
  const auto r = simulate_epidemic(g.population, cfg);
  const auto tl = build_timeline(r);
  int checked = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.infection(i) || *r.infection(i) + 3 > r.t_max()) continue;
    int days = 0;
    for (Day t = 0; t <= r.t_max(); ++t) days += tl.infectious(i, t);
    CHECK(days == 3);
    CHECK(*r.removal(i) == *r.infection(i) + 3);
    ++checked;
  }
  CHECK(checked > 1);
}

TEST_CASE("seir latent and infectious windows") {
  Rng rng(5);
  const auto g = generate_population(SpatialScenario::csr(), 80, rng);
  SimConfig cfg;
  cfg.t_max = 40;
  cfg.latent_period = 5;
  cfg.infectious_period = 4;
  cfg.params = {2.0, 1.5, {}, {}, {}};
  const auto r = simulate_seir(g.population, cfg);
  const auto tl = build_timeline(r, {Frame::SEIR, 5, 4});
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!r.infection(i)) continue;
    const Day e = *r.infection(i);
    if (e + 9 > r.t_max()) continue;
    for (Day t = e; t < e + 5; ++t) CHECK(tl.state(i, t) == Compartment::E);
    for (Day t = e + 5; t < e + 9; ++t) CHECK(tl.state(i, t) == Compartment::I);
    CHECK(tl.state(i, e + 9) == Compartment::R);
  }
  CHECK(r.infected_count() > 1);
  cfg.latent_period = 0;
  CHECK_THROWS_AS(simulate_seir(g.population, cfg), ValidationError);
}

TEST_CASE("zero-spark composite epidemics never cross clusters") {
  Rng rng(6);
  const auto g = generate_population(SpatialScenario::clustered(4, 3.0), 80, rng);
  const auto cl = ClusterAssignment::from_labels(g.population, g.labels);
  SimConfig cfg;
  cfg.spec.composite = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    cfg.seed = seed;
    const auto r = simulate_epidemic(g.population, cfg, &cl);
    int label = -1;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (!r.infection(i)) continue;
      if (label < 0) label = g.labels[i];
      CHECK(g.labels[i] == label);
    }
  }
}

TEST_CASE("infection frequency for one pair matches the model probability") {
  const Population pop({{0, 0}, {1.5, 0}});
  const DistanceMatrix dist = pairwise_distances(pop);
  const EpidemicSimulator sim(pop, dist, ModelSpec{});
  const ModelParams p{0.8, 2.0, {}, {}, {}};
  const double prob = infection_probability(0.8 * std::pow(1.5, -2.0));
  Rng rng(77);
  const int reps = 100000;
  int hits = 0;
  for (int r = 0; r < reps; ++r) {
    const auto rec = sim.run(p, 1, 3, 0, 1, rng);
    const std::size_t other = *rec.infection(0) == 0 ? 1 : 0;
    hits += rec.infection(other).has_value();
  }
  const double se = std::sqrt(prob * (1 - prob) / reps);
  CHECK(std::abs(hits / static_cast<double>(reps) - prob) < 3 * se);
}

TEST_CASE("continuing from an observed state keeps the observed past") {
  Rng rng(8);
  const auto g = generate_population(SpatialScenario::csr(), 60, rng);
  SimConfig cfg;
  cfg.seed = 3;
  const auto truth = simulate_epidemic(g.population, cfg);
  const DistanceMatrix dist = pairwise_distances(g.population);
  const EpidemicSimulator sim(g.population, dist, ModelSpec{});
  Rng r2(1);
  const auto cont = sim.continue_from(cfg.params, truth, 5, truth.t_max(), 3, 0, r2);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth.infection(i) && *truth.infection(i) <= 5) CHECK(cont.infection(i) == truth.infection(i));
    if (cont.infection(i) && *cont.infection(i) <= 5) CHECK(truth.infection(i) == cont.infection(i));
  }
}
