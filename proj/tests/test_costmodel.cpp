#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "corpus.hpp"
#include "netsens/costmodel.hpp"

using namespace netsens;

TEST_CASE("hop counts") {
  SUBCASE("three-tier fat tree, k=4") {
    TopologySpec t;
    t.kind = TopoKind::FatTree3Tier;
    t.k = 4;  // 2 hosts/leaf, 4 hosts/pod, 16 hosts
    CHECK(hops(t, 0, 0) == 0);
    CHECK(hops(t, 0, 1) == 1);   // same leaf
    CHECK(hops(t, 0, 2) == 3);   // same pod, different leaf
    CHECK(hops(t, 0, 4) == 5);   // different pod
    CHECK(hops(t, 15, 14) == 1);
    CHECK_THROWS_AS(hops(t, 0, 16), ModelError);
  }
  SUBCASE("dragonfly g=2 a=2 p=2") {
    TopologySpec t;
    t.kind = TopoKind::Dragonfly;
    t.groups = 2;
    t.routers = 2;
    t.nodes_per_router = 2;
    CHECK(hops(t, 0, 1) == 1);  // same router
    CHECK(hops(t, 0, 2) == 2);  // same group
    CHECK(hops(t, 0, 4) == 3);  // different group
    CHECK(hops(t, 7, 6) == 1);
  }
  SUBCASE("brute-force agreement on small instances") {
    TopologySpec ft;
    ft.kind = TopoKind::FatTree3Tier;
    ft.k = 4;
    auto sg = corpus::explicit_fat_tree(4);
    for (std::int64_t a = 0; a < 16; ++a)
      for (std::int64_t b = 0; b < 16; ++b) CHECK(hops(ft, a, b) == sg.min_switches(a, b));
    TopologySpec df;
    df.kind = TopoKind::Dragonfly;
    df.groups = 3;
    df.routers = 2;
    df.nodes_per_router = 2;
    auto dg = corpus::explicit_dragonfly(3, 2, 2);
    for (std::int64_t a = 0; a < 12; ++a)
      for (std::int64_t b = 0; b < 12; ++b) CHECK(hops(df, a, b) == dg.min_switches(a, b));
  }
}

TEST_CASE("configuration parsing with units") {
  auto cfg = parse_model_config(std::string(R"({
    "L": {"value": 0.5, "unit": "us"},
    "o": [200, "ns"],
    "G": {"value": 5, "unit": "ns_per_byte"},
    "S": 1024,
    "P": 4,
    "strict_g": true,
    "g": {"value": 1, "unit": "us"}
  })"));
  CHECK(cfg.params.L_ns == doctest::Approx(500));
  CHECK(cfg.params.o_ns == doctest::Approx(200));
  CHECK(cfg.params.G_ns_per_byte == doctest::Approx(5));
  CHECK(cfg.params.S == 1024);
  CHECK(cfg.strict_g);
  CHECK(*cfg.params.g_ns == doctest::Approx(1000));

  SUBCASE("bad unit, negative value, and dual mode all reject") {
    CHECK_THROWS_AS(parse_model_config(std::string(R"({"L": [1, "lightyears"]})")), ModelError);
    CHECK_THROWS_AS(parse_model_config(std::string(R"({"o": -5})")), ModelError);
    ModelConfig bad = corpus::uniform_config(100);
    bad.topology = TopologySpec{};
    bad.heterogeneous = HeterogeneousParams{{{0, 1}, {1, 0}}, {{0, 1}, {1, 0}}};
    CHECK_THROWS_AS(cost_mode(bad), ModelError);
  }
  SUBCASE("topology block") {
    auto tc = parse_model_config(std::string(R"({
      "topology": {"kind": "fat_tree", "k": 16,
                   "l_wire": 274, "d_switch": 108}})"));
    REQUIRE(tc.topology.has_value());
    CHECK(tc.topology->l_wire_ns == 274);
    CHECK(tc.topology->d_switch_ns == 108);
    CHECK_THROWS_AS(parse_model_config(std::string(R"({"topology": {"kind": "torus"}})")),
                    ModelError);
  }
}

TEST_CASE("eager cost assembly on the running example") {
  auto cfg = corpus::uniform_config(500);
  auto g = build_graph(corpus::breakpoint_example(), cfg.params.S);
  CostModel cm(cfg, 2);
  auto ac = assemble_costs(g, cm);
  int lsym = cm.latency_symbol();
  for (const auto& e : g.edges)
    if (e.kind == EdgeKind::Comm) {
      const auto& ce = ac.edge[static_cast<std::size_t>(&e - g.edges.data())];
      CHECK(ce.coeff(lsym) == 1);
      CHECK(ce.coeff(cm.bandwidth_symbol()) == 3);  // (s-1) with s=4
      CHECK(ce.c0 == 0);
    }
  for (const auto& v : g.vertices)
    if (v.kind == VertexKind::Calc)
      CHECK(ac.vertex[static_cast<std::size_t>(v.id)].c0 == static_cast<double>(v.cost));
    else
      CHECK(ac.vertex[static_cast<std::size_t>(v.id)].c0 == cfg.params.o_ns);
}

TEST_CASE("rendezvous cost assembly") {
  auto cfg = corpus::uniform_config(500, 100);
  auto g = build_graph(corpus::breakpoint_example(), 4);
  CostModel cm(cfg, 2);
  auto ac = assemble_costs(g, cm);
  int lsym = cm.latency_symbol();
  for (const auto& e : g.edges) {
    const auto& ce = ac.edge[static_cast<std::size_t>(&e - g.edges.data())];
    if (e.kind == EdgeKind::Comm) {
      // data cost lives on the send vertex; the message edge is free
      CHECK(ce.c0 == 0);
      CHECK(ce.terms.empty());
    } else if (e.kind == EdgeKind::Virtual) {
      CHECK(ce.c0 == cfg.params.o_ns);  // receiver readiness to match point
    } else if (g.vertex(e.dst).kind == VertexKind::Send) {
      CHECK(ce.c0 == cfg.params.o_ns);  // sender readiness: o + L
      CHECK(ce.coeff(lsym) == 1);
    }
  }
  for (const auto& v : g.vertices)
    if (v.kind == VertexKind::Send) {
      const auto& vc = ac.vertex[static_cast<std::size_t>(v.id)];
      CHECK(vc.coeff(lsym) == 1);  // final transfer latency
      CHECK(vc.coeff(cm.bandwidth_symbol()) == 3);
    }
  SUBCASE("optional extra completion latency") {
    cfg.rv_fin_latency = true;
    CostModel cm2(cfg, 2);
    auto ac2 = assemble_costs(g, cm2);
    for (const auto& v : g.vertices)
      if (v.kind == VertexKind::Send)
        CHECK(ac2.vertex[static_cast<std::size_t>(v.id)].coeff(cm2.latency_symbol()) == 2);
  }
}

TEST_CASE("strict injection gap") {
  // two back-to-back sends on one rank: the second waits max(o, g) - o extra
  ScheduleProgram p;
  p.num_ranks = 2;
  p.ranks.resize(2);
  p.ranks[0] = {corpus::send_op("s0", 4, 1, 0), corpus::send_op("s1", 4, 1, 1, {"s0"})};
  p.ranks[1] = {corpus::recv_op("r0", 4, 0, 0), corpus::recv_op("r1", 4, 0, 1, {"r0"})};
  auto cfg = corpus::uniform_config(100, 50);
  cfg.params.g_ns = 300;
  cfg.strict_g = true;
  auto g = build_graph(p, 1 << 20);
  CostModel cm(cfg, 2);
  auto ac = assemble_costs(g, cm);
  bool found = false;
  for (const auto& e : g.edges)
    if (e.kind == EdgeKind::Local && e.adjacent_injection &&
        g.vertex(e.src).kind == VertexKind::Send && g.vertex(e.dst).kind == VertexKind::Send) {
      CHECK(ac.edge[static_cast<std::size_t>(&e - g.edges.data())].c0 == doctest::Approx(250));
      found = true;
    }
  CHECK(found);
}

TEST_CASE("topology and heterogeneous expressions") {
  SUBCASE("per-message wire cost is (h+1) wires plus h switch delays") {
    ModelConfig cfg = corpus::uniform_config(0);
    TopologySpec t;
    t.kind = TopoKind::FatTree3Tier;
    t.k = 4;
    t.l_wire_ns = 274;
    t.d_switch_ns = 108;
    cfg.topology = t;
    CostModel cm(cfg, 16);
    auto e = cm.latency_expr(0, 4);  // cross-pod: h = 5
    CHECK(e.coeff(cm.latency_symbol()) == 6);
    CHECK(e.coeff(cm.d_switch_symbol()) == 5);
    auto near = cm.latency_expr(0, 1);  // same leaf: h = 1
    CHECK(near.coeff(cm.latency_symbol()) == 2);
    CHECK_THROWS_AS(CostModel(cfg, 17), ModelError);  // capacity is 16
  }
  SUBCASE("dragonfly wire classes decompose by hop class") {
    ModelConfig cfg = corpus::uniform_config(0);
    TopologySpec t;
    t.kind = TopoKind::Dragonfly;
    t.groups = 2;
    t.routers = 2;
    t.nodes_per_router = 2;
    t.wire_classes = WireClasses{10, 20, 30};
    cfg.topology = t;
    CostModel cm(cfg, 8);
    const auto& st = cm.symbols();
    auto far = cm.latency_expr(0, 4);  // h = 3: [tc, intra, inter, tc]
    CHECK(far.coeff(st.find("l_tc")) == 2);
    CHECK(far.coeff(st.find("l_intra")) == 1);
    CHECK(far.coeff(st.find("l_inter")) == 1);
    auto same_group = cm.latency_expr(0, 2);  // h = 2: [tc, intra, tc]
    CHECK(same_group.coeff(st.find("l_inter")) == 0);
  }
  SUBCASE("heterogeneous pair symbols carry the matrix bounds") {
    ModelConfig cfg = corpus::uniform_config(0);
    cfg.heterogeneous =
        HeterogeneousParams{{{0, 100, 300}, {100, 0, 300}, {300, 300, 0}},
                            {{0, 1, 2}, {1, 0, 2}, {2, 2, 0}}};
    CostModel cm(cfg, 3);
    CHECK(cm.symbols().syms[static_cast<std::size_t>(cm.pair_latency_symbol(0, 2))]
              .lower_bound_ns == 300);
    CHECK(cm.pair_latency_symbol(0, 1) == cm.pair_latency_symbol(1, 0));
    auto e = cm.latency_expr(2, 0);
    CHECK(e.coeff(cm.pair_latency_symbol(0, 2)) == 1);
    SUBCASE("asymmetric matrix rejected") {
      cfg.heterogeneous->L_matrix_ns[0][1] = 7;
      CHECK_THROWS_AS(CostModel(cfg, 3), ModelError);
    }
  }
}
