#include <cmath>
#include <random>

#include "cilm/core.hpp"
#include "cilm/errors.hpp"
#include "doctest.h"

using namespace cilm;

namespace {

EpidemicRecord one(std::optional<Day> inf, std::optional<Day> rem, Day t_max) {
  return EpidemicRecord({inf}, {rem}, t_max);
}

}  // namespace

TEST_CASE("sir timeline follows infection and removal days") {
  const auto tl = build_timeline(one(2, 5, 6));
  CHECK(tl.state(0, 0) == Compartment::S);
  CHECK(tl.state(0, 1) == Compartment::S);
  for (Day t : {2, 3, 4}) CHECK(tl.state(0, t) == Compartment::I);
  CHECK(tl.state(0, 5) == Compartment::R);
  CHECK(tl.state(0, 6) == Compartment::R);
}

TEST_CASE("never infected stays susceptible") {
  const auto tl = build_timeline(one(std::nullopt, std::nullopt, 4));
  for (Day t = 0; t <= 4; ++t) CHECK(tl.susceptible(0, t));
}

TEST_CASE("seir timeline with fixed latent and infectious periods") {
  const auto tl = build_timeline(one(10, std::nullopt, 30), {Frame::SEIR, 5, 4});
  CHECK(*tl.infectious_from(0) == 15);
  CHECK(*tl.removed_from(0) == 19);
  CHECK(tl.state(0, 9) == Compartment::S);
  CHECK(tl.state(0, 10) == Compartment::E);
  CHECK(tl.state(0, 14) == Compartment::E);
  CHECK(tl.state(0, 15) == Compartment::I);
  CHECK(tl.state(0, 18) == Compartment::I);
  CHECK(tl.state(0, 19) == Compartment::R);
}

TEST_CASE("seir cull before the infectious period ends") {
  const auto early = build_timeline(one(10, 17, 30), {Frame::SEIR, 5, 4});
  CHECK(*early.removed_from(0) == 17);
  CHECK(early.state(0, 16) == Compartment::I);
  const auto exposed_cull = build_timeline(one(10, 13, 30), {Frame::SEIR, 5, 4});
  CHECK_FALSE(exposed_cull.infectious_from(0).has_value());
  for (Day t = 10; t < 13; ++t) CHECK(exposed_cull.state(0, t) == Compartment::E);
  CHECK(exposed_cull.state(0, 13) == Compartment::R);
}

TEST_CASE("seir requires a latent period") {
  CHECK_THROWS_AS(build_timeline(one(1, std::nullopt, 5), {Frame::SEIR, 0, 4}), ValidationError);
}

TEST_CASE("record validation names the offending id") {
  auto msg = [](auto&& f) {
    try {
      f();
    } catch (const ValidationError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg([] { EpidemicRecord({1, 3}, {2, 3}, 5); }).find("id 1") != std::string::npos);
  CHECK(msg([] { EpidemicRecord({std::nullopt}, {2}, 5); }).find("id 0") != std::string::npos);
  CHECK(msg([] { EpidemicRecord({1, 7}, {{}, {}}, 5); }).find("id 1") != std::string::npos);
  CHECK_THROWS_AS(EpidemicRecord({1}, {6}, 5), ValidationError);
}

TEST_CASE("compartments partition the population and are monotone") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 12;
    const Day t_max = 10;
    std::vector<std::optional<Day>> inf(n), rem(n);
    for (int i = 0; i < n; ++i) {
      if (rng() % 3 == 0) continue;
      inf[static_cast<std::size_t>(i)] = static_cast<Day>(rng() % 8);
      if (rng() % 2) rem[static_cast<std::size_t>(i)] = *inf[static_cast<std::size_t>(i)] + 1 + static_cast<Day>(rng() % 2);
    }
    for (Frame f : {Frame::SIR, Frame::SEIR}) {
      const TimelineOptions opts = f == Frame::SIR ? TimelineOptions{} : TimelineOptions{Frame::SEIR, 2, 3};
      const auto tl = build_timeline(EpidemicRecord(inf, rem, t_max), opts);
      for (Day t = 0; t <= t_max; ++t) {
        CHECK(tl.S(t).size() + tl.E(t).size() + tl.I(t).size() + tl.R(t).size() == static_cast<std::size_t>(n));
        if (t < t_max) {
          for (int i : tl.S(t + 1)) CHECK(tl.susceptible(static_cast<std::size_t>(i), t));
          for (int i : tl.R(t)) CHECK(tl.state(static_cast<std::size_t>(i), t + 1) == Compartment::R);
        }
      }
    }
  }
}

TEST_CASE("incidence curve indexing") {
  const auto none = incidence_curve(build_timeline(EpidemicRecord({0, {}}, {3, {}}, 5)));
  CHECK(none == std::vector<int>{0, 0, 0, 0, 0});
  const auto two = incidence_curve(build_timeline(EpidemicRecord({0, 3, 3}, {{}, {}, {}}, 5)));
  CHECK(two.size() == 5);
  CHECK(two[2] == 2);
}

TEST_CASE("incidence curve sums to infections after day 0") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const Day t_max = 1 + static_cast<Day>(rng() % 12);
    std::vector<std::optional<Day>> inf(15), rem(15);
    int expected = 0;
    for (auto& v : inf) {
      if (rng() % 2) {
        v = static_cast<Day>(rng() % static_cast<unsigned>(t_max + 1));
        if (*v >= 1) ++expected;
      }
    }
    const auto curve = incidence_curve(build_timeline(EpidemicRecord(inf, rem, t_max)));
    CHECK(curve.size() == static_cast<std::size_t>(t_max));
    int total = 0;
    for (int c : curve) {
      CHECK(c >= 0);
      total += c;
    }
    CHECK(total == expected);
  }
}

TEST_CASE("pairwise distances") {
  const auto d = pairwise_distances(Population({{0, 0}, {3, 4}}));
  CHECK(d(0, 1) == 5.0);
  CHECK(d(1, 0) == 5.0);
  CHECK(d(0, 0) == 0.0);
  const auto single = pairwise_distances(Population({{2, 2}}));
  CHECK(single.size() == 1);
  CHECK(single(0, 0) == 0.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10, 10);
  std::vector<Point> pts;
  for (int i = 0; i < 10; ++i) pts.push_back({u(rng), u(rng)});
  const auto dm = pairwise_distances(Population(pts));
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      double dx = pts[i].x - pts[j].x, dy = pts[i].y - pts[j].y;
      CHECK(std::abs(dm(i, j) - std::sqrt(dx * dx + dy * dy)) <= 1e-12);
      CHECK(dm(i, j) == dm(j, i));
      for (std::size_t k = 0; k < 10; ++k) CHECK(dm(i, k) <= dm(i, j) + dm(j, k) + 1e-12);
    }
  }
}

TEST_CASE("coincident coordinates are rejected") {
  CHECK_THROWS_AS(Population({{1, 1}, {2, 2}, {1, 1}}), ValidationError);
  CHECK_THROWS_AS(Population({{1, std::nan("")}}), ValidationError);
}

TEST_CASE("truncation drops later events") {
  const EpidemicRecord r({0, 2, 6}, {3, 7, {}}, 8);
  const auto t = r.truncated(5);
  CHECK(t.t_max() == 5);
  CHECK(*t.infection(0) == 0);
  CHECK(*t.removal(0) == 3);
  CHECK(*t.infection(1) == 2);
  CHECK_FALSE(t.removal(1).has_value());
  CHECK_FALSE(t.infection(2).has_value());
}
