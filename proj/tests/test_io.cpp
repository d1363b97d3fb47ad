#include <sstream>

#include "cilm/errors.hpp"
#include "cilm/io.hpp"
#include "doctest.h"

using namespace cilm;

TEST_CASE("population and events round trip") {
  const Population pop({{0.1, 2.0 / 3.0}, {1e-7, 29.999999999999996}, {5, 5}});
  std::stringstream ps;
  io::write_population(ps, pop);
  const Population back = io::read_population(ps);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].x == pop[i].x);
    CHECK(back[i].y == pop[i].y);
  }
  const EpidemicRecord rec({0, 2, {}}, {3, {}, {}}, 31);
  std::stringstream es;
  io::write_events(es, rec);
  CHECK(es.str() == "id,infection_time,removal_time\n0,0,3\n1,2,\n2,,\n");
  const EpidemicRecord rb = io::read_events(es, 31);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(rb.infection(i) == rec.infection(i));
    CHECK(rb.removal(i) == rec.removal(i));
  }
}

TEST_CASE("csv errors carry the line") {
  std::stringstream bad("id,x,y\n0,1,2\n1,abc,3\n");
  try {
    io::read_population(bad, "pop.csv");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("pop.csv:3") != std::string::npos);
  }
  std::stringstream header("id,y,x\n");
  CHECK_THROWS_AS(io::read_population(header), ValidationError);
  std::stringstream order("id,x,y\n1,0,0\n");
  CHECK_THROWS_AS(io::read_population(order), ValidationError);
}

TEST_CASE("assignment round trip") {
  const Population pop({{0, 0}, {2, 0}, {10, 10}});
  const auto a = ClusterAssignment::from_labels(pop, {1, 1, 0});
  std::stringstream as, cs;
  io::write_assignment(as, a);
  io::write_centroids(cs, a);
  const auto b = io::read_assignment(as, pop, &cs);
  CHECK(b.membership == a.membership);
  CHECK(b.K == 2);
  CHECK(b.centroids[1].x == 1.0);
  std::stringstream as2;
  io::write_assignment(as2, a);
  const auto c = io::read_assignment(as2, pop);
  CHECK(c.centroids[0].x == 10.0);
}

TEST_CASE("trace round trip") {
  McmcTrace tr;
  tr.names = {"alpha", "beta", "beta_tilde"};
  tr.draws = {{0.1, 2.5, 1.0 / 3.0}, {0.2, 2.25, 0.7}};
  tr.log_post = {-10.5, -9.25};
  std::stringstream ss;
  io::write_trace(ss, tr);
  CHECK(ss.str().rfind("iter,alpha,beta,beta_tilde,log_post\n", 0) == 0);
  const auto back = io::read_trace(ss, 1);
  CHECK(back.names == tr.names);
  CHECK(back.draws == tr.draws);
  CHECK(back.log_post == tr.log_post);
  CHECK(back.burn_in == 1);
  std::stringstream wrong("iter,beta,alpha,log_post\n0,1,1,0\n");
  CHECK_THROWS_AS(io::read_trace(wrong, 0), ValidationError);
}

TEST_CASE("report and curves") {
  std::stringstream rs;
  io::write_report(rs, {{"silm", {10.5, -5.0, 0.25}, 40, 1000}});
  CHECK(rs.str() == "model,waic,lppd,p_waic,units,draws\nsilm,10.5,-5,0.25,40,1000\n");
  CurveEnsemble ens;
  ens.from = 5;
  ens.lower = {0, 1};
  ens.median = {1, 2};
  ens.upper = {2, 3.5};
  std::stringstream cs;
  io::write_curves(cs, ens);
  CHECK(cs.str() == "t,lower,median,upper\n5,0,1,2\n6,1,2,3.5\n");
}

TEST_CASE("fmd window") {
  std::stringstream in(
      "id,x,y,infection_day,removal_day\n"
      "10,0,0,20,25\n"   // removed before the window: dropped
      "11,1,0,28,33\n"   // infectious into the window
      "12,2,0,35,40\n"   // infected inside
      "13,3,0,,45\n"     // culled without infection: susceptible
      "14,4,0,49,60\n"   // removal after the end: unobserved
      "15,5,0,55,58\n"   // infected after the end: susceptible
      "16,6,0,,\n");
  const auto d = io::read_fmd(in, {30, 50});
  CHECK(d.source_ids == std::vector<long>{11, 12, 13, 14, 15, 16});
  CHECK(d.population.size() == 6);
  CHECK(d.record.t_max() == 50);
  CHECK(d.record.observe_from() == 30);
  CHECK(d.record.infection(0) == 28);
  CHECK(d.record.removal(0) == 33);
  CHECK(d.record.infection(1) == 35);
  CHECK_FALSE(d.record.infection(2).has_value());
  CHECK_FALSE(d.record.removal(2).has_value());
  CHECK(d.record.infection(3) == 49);
  CHECK_FALSE(d.record.removal(3).has_value());
  CHECK_FALSE(d.record.infection(4).has_value());
  std::stringstream bad("id,x,y,infection_day,removal_day\n1,0,0,5,5\n");
  CHECK_THROWS_AS(io::read_fmd(bad, {0, 10}), ValidationError);
  std::stringstream ok("id,x,y,infection_day,removal_day\n");
  CHECK_THROWS_AS(io::read_fmd(ok, {10, 10}), ValidationError);
}

TEST_CASE("shortest decimal formatting") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(2.0) == "2");
  CHECK(std::stod(io::format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
