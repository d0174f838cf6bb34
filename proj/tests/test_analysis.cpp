#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "corpus.hpp"
#include "netsens/analysis.hpp"
#include "netsens/oracle.hpp"

using namespace netsens;

namespace {

struct Fixture {
  ExecutionGraph g;
  CostModel cm;
  Analyzer an;
  Fixture(const ScheduleProgram& p, const ModelConfig& cfg)
      : g(build_graph(p, cfg.params.S)), cm(cfg, g.num_ranks), an(g, cm) {}
};

}  // namespace

TEST_CASE("single-point analysis of the running example") {
  Fixture f(corpus::breakpoint_example(), corpus::uniform_config(500));
  auto r = f.an.analyze(0, true);
  CHECK(r.T_ns == doctest::Approx(1615).epsilon(1e-12));
  CHECK(r.lambda_l == doctest::Approx(1));
  CHECK(r.lambda_g_bytes == doctest::Approx(3));
  CHECK(r.rho_l == doctest::Approx(500.0 / 1615.0).epsilon(1e-9));
  CHECK(r.rho_l_paper == doctest::Approx(1615.0 / 500.0).epsilon(1e-9));
  CHECK(r.fl_ns == doctest::Approx(385).epsilon(1e-12));
  CHECK(std::isinf(r.fu_ns));

  SUBCASE("below the breakpoint the latency fraction vanishes") {
    Fixture low(corpus::breakpoint_example(), corpus::uniform_config(200));
    auto rl = low.an.analyze(0, true);
    CHECK(rl.lambda_l == doctest::Approx(0));
    CHECK(rl.rho_l == doctest::Approx(0));
    CHECK(rl.rho_l_paper == doctest::Approx(0));  // undefined, reported as 0
  }
  SUBCASE("fully latency-bound chain has rho = 1") {
    ScheduleProgram p;
    p.num_ranks = 2;
    p.ranks.resize(2);
    p.ranks[0] = {corpus::send_op("s", 1, 1, 0)};
    p.ranks[1] = {corpus::recv_op("r", 1, 0, 0)};
    Fixture chain(p, corpus::uniform_config(700, 0, 0));
    CHECK(chain.an.analyze(0, false).rho_l == doctest::Approx(1));
  }
}

TEST_CASE("critical latencies") {
  SUBCASE("worked example finds the breakpoint in two iterations") {
    Fixture f(corpus::breakpoint_example(), corpus::uniform_config(500));
    auto res = f.an.critical_latencies(200, 500);
    REQUIRE(res.latencies_ns.size() == 1);
    CHECK(res.latencies_ns[0] == doctest::Approx(385).epsilon(1e-12));
    CHECK(res.iterations <= 2);
  }
  SUBCASE("communication-free program yields nothing") {
    ScheduleProgram p;
    p.num_ranks = 1;
    p.ranks.push_back({corpus::calc_op("c", 500)});
    Fixture f(p, corpus::uniform_config(100));
    CHECK(f.an.critical_latencies(0.1, 10000).latencies_ns.empty());
  }
  SUBCASE("matches the envelope's kinks on random graphs") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      auto c = corpus::random_case(seed, 8);
      Fixture f(c.program, c.cfg);
      auto ac = assemble_costs(f.g, f.cm);
      auto env = dp_envelope(f.g, ac, f.cm.lower_bounds(), f.cm.latency_symbol());
      auto expected = env.breakpoints();
      // The scan hops by min(L - step, fl - eps), so kinks packed closer
      // than the step width can be jumped over; pick a step below the
      // smallest gap so every kink must be visited.
      double min_gap = 50000;
      for (std::size_t i = 1; i < expected.size(); ++i)
        min_gap = std::min(min_gap, expected[i] - expected[i - 1]);
      double step = std::max(0.5, min_gap / 2);
      auto found = f.an.critical_latencies(1, 50000, step, 1e-3);
      CAPTURE(seed);
      for (double l : found.latencies_ns) {
        bool is_kink = false;
        for (double b : expected)
          if (std::fabs(b - l) < 1e-3) is_kink = true;
        CHECK(is_kink);
      }
      for (double b : expected) {
        if (b < 1 || b > 50000) continue;
        bool near_other = false;  // a twin within the step may absorb it
        for (double b2 : expected)
          if (b2 != b && std::fabs(b2 - b) <= step) near_other = true;
        if (near_other) continue;
        bool was_found = false;
        for (double l : found.latencies_ns)
          if (std::fabs(b - l) < 1e-3) was_found = true;
        CHECK(was_found);
      }
    }
  }
  SUBCASE("invalid interval rejected") {
    Fixture f(corpus::breakpoint_example(), corpus::uniform_config(500));
    CHECK_THROWS_AS(f.an.critical_latencies(500, 200), std::invalid_argument);
  }
}

TEST_CASE("latency tolerance") {
  SUBCASE("absolute threshold on the running example") {
    Fixture f(corpus::breakpoint_example(), corpus::uniform_config(500));
    auto res = f.an.tolerance_threshold(2000);
    CHECK(res.feasible);
    CHECK(res.l_max_ns == doctest::Approx(885).epsilon(1e-12));
  }
  SUBCASE("no latency sensitivity means unbounded tolerance") {
    ScheduleProgram p;
    p.num_ranks = 1;
    p.ranks.push_back({corpus::calc_op("c", 500)});
    Fixture f(p, corpus::uniform_config(100));
    auto res = f.an.latency_tolerance(5);
    CHECK(res.unbounded);
    CHECK(std::isinf(res.l_max_ns));
  }
  SUBCASE("self-consistency and monotonicity over percentages") {
    WorkloadOptions w;
    w.pattern = WorkloadPattern::AllreduceLoop;
    w.num_ranks = 8;
    w.iterations = 3;
    w.msg_size = 64;
    ModelConfig cfg = corpus::uniform_config(1000, 150, 2);
    cfg.params.P = 8;
    Fixture f(generate_workload(w), cfg);
    double prev = 0;
    for (double pct : {1.0, 2.0, 5.0}) {
      auto res = f.an.latency_tolerance(pct);
      REQUIRE(res.feasible);
      REQUIRE(!res.unbounded);
      double t_at = f.an.predict(res.l_max_ns - f.an.base_latency_ns());
      CHECK(t_at == doctest::Approx(res.baseline_T_ns * (1 + pct / 100)).epsilon(1e-9));
      CHECK(res.l_max_ns >= prev);
      prev = res.l_max_ns;
    }
  }
}

TEST_CASE("sweeps") {
  SUBCASE("fig-style step sequence across the breakpoint") {
    Fixture f(corpus::breakpoint_example(), corpus::uniform_config(0));
    auto recs = f.an.sweep({0, 200, 400, 600});
    REQUIRE(recs.size() == 4);
    CHECK(recs[0].lambda_l == doctest::Approx(0));
    CHECK(recs[1].lambda_l == doctest::Approx(0));
    CHECK(recs[2].lambda_l == doctest::Approx(1));
    CHECK(recs[3].lambda_l == doctest::Approx(1));
  }
  SUBCASE("zero-delta record equals single-point analysis") {
    Fixture f(corpus::breakpoint_example(), corpus::uniform_config(500));
    auto rec = f.an.sweep({0}).front();
    auto single = f.an.analyze(0, true);
    CHECK(rec.T_ns == single.T_ns);
    CHECK(rec.lambda_l == single.lambda_l);
    CHECK(rec.fl_ns == single.fl_ns);
  }
  SUBCASE("affine within a shared feasibility range") {
    Fixture f(corpus::breakpoint_example(), corpus::uniform_config(500));
    auto recs = f.an.sweep({100, 300});  // both above the 385 ns breakpoint
    CHECK(recs[0].lambda_l == recs[1].lambda_l);
    CHECK(recs[1].T_ns - recs[0].T_ns == doctest::Approx(recs[0].lambda_l * 200));
    CHECK(recs[0].fl_ns == recs[1].fl_ns);
  }
  SUBCASE("monotone, convex, step-function structure on the corpus") {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      auto c = corpus::random_case(seed, 8);
      Fixture f(c.program, c.cfg);
      std::vector<double> deltas;
      for (int i = 0; i < 50; ++i) deltas.push_back(i * 200.0);
      auto recs = f.an.sweep(deltas);
      CAPTURE(seed);
      for (std::size_t i = 1; i < recs.size(); ++i) {
        CHECK(recs[i].T_ns >= recs[i - 1].T_ns - 1e-9);
        CHECK(recs[i].lambda_l >= recs[i - 1].lambda_l - 1e-12);
        CHECK(recs[i].rho_l >= 0);
        CHECK(recs[i].rho_l <= 1);
        if (i + 1 < recs.size())  // convexity of T over evenly spaced deltas
          CHECK(recs[i + 1].T_ns - recs[i].T_ns >= recs[i].T_ns - recs[i - 1].T_ns - 1e-6);
      }
    }
  }
  SUBCASE("csv schema") {
    Fixture f(corpus::breakpoint_example(), corpus::uniform_config(500));
    auto csv = records_csv(f.an.sweep({0}));
    CHECK(csv.rfind("delta_l_us,T_s,lambda_l,lambda_g_bytes,rho_l,fl_us,fu_us\n", 0) == 0);
  }
}

TEST_CASE("lambda bounded by the longest message chain") {
  WorkloadOptions w;
  w.pattern = WorkloadPattern::Pipeline;
  w.num_ranks = 5;
  w.iterations = 2;
  ModelConfig cfg = corpus::uniform_config(100000);  // latency-dominated
  cfg.params.P = 5;
  Fixture f(generate_workload(w), cfg);
  // each pipeline wave crosses 4 links, 2 iterations: chain length 8
  CHECK(f.an.latency_sensitivity() <= 8.0 + 1e-9);
  CHECK(f.an.latency_sensitivity() >= 1.0);
}
