#pragma once

// Affine cost assignment under LogGPS, topology-parameterized, or
// heterogeneous configurations. Costs are expressions over decision symbols
// (l, g_bw, l_wire, d_switch, per-pair l_ij/g_ij, ...) so the same
// assembly feeds the LP generator, the evaluator, and the oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "netsens/graph.hpp"

namespace netsens {

class ModelError : public std::runtime_error {
public:
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

struct LogGPSParams {
  double L_ns = 0;
  double o_ns = 0;
  std::optional<double> g_ns;       // inter-message gap; ignored unless strict_g
  double G_ns_per_byte = 0;
  int P = 1;
  std::int64_t S = 1 << 30;         // eager/rendezvous threshold in bytes
};

enum class TopoKind { Flat, FatTree3Tier, Dragonfly };

struct WireClasses {
  double l_tc_ns = 0;
  double l_intra_ns = 0;
  double l_inter_ns = 0;
};

struct TopologySpec {
  TopoKind kind = TopoKind::Flat;
  int k = 0;                        // FatTree3Tier radix (even)
  int groups = 0, routers = 0, nodes_per_router = 0;  // Dragonfly g/a/p
  double l_wire_ns = 0;
  double d_switch_ns = 0;
  std::optional<WireClasses> wire_classes;  // Dragonfly refinement

  std::int64_t capacity() const {
    switch (kind) {
      case TopoKind::Flat: return std::numeric_limits<std::int64_t>::max();
      case TopoKind::FatTree3Tier:
        return static_cast<std::int64_t>(k) * k * k / 4;
      case TopoKind::Dragonfly:
        return static_cast<std::int64_t>(groups) * routers * nodes_per_router;
    }
    return 0;
  }
};

struct HeterogeneousParams {
  std::vector<std::vector<double>> L_matrix_ns;        // P x P, symmetric
  std::vector<std::vector<double>> G_matrix_ns_per_b;  // P x P, symmetric
};

struct ModelConfig {
  LogGPSParams params;
  std::optional<TopologySpec> topology;
  std::optional<HeterogeneousParams> heterogeneous;
  bool strict_g = false;
  bool rv_fin_latency = false;
};

enum class CostMode { Uniform, Topology, Heterogeneous };

inline CostMode cost_mode(const ModelConfig& cfg) {
  if (cfg.heterogeneous && cfg.topology)
    throw ModelError("config declares both topology and heterogeneous matrices");
  if (cfg.heterogeneous) return CostMode::Heterogeneous;
  if (cfg.topology) return CostMode::Topology;
  return CostMode::Uniform;
}

// Number of switches on the minimal route between two nodes under dense
// placement (node n at position n).
inline int hops(const TopologySpec& spec, std::int64_t node_i, std::int64_t node_j) {
  if (node_i < 0 || node_j < 0 || node_i >= spec.capacity() || node_j >= spec.capacity())
    throw ModelError("hops: node index out of range for topology");
  if (node_i == node_j) return 0;
  switch (spec.kind) {
    case TopoKind::Flat:
      return 0;
    case TopoKind::FatTree3Tier: {
      std::int64_t leaf = spec.k / 2;
      std::int64_t pod = static_cast<std::int64_t>(spec.k) * spec.k / 4;
      if (node_i / leaf == node_j / leaf) return 1;
      if (node_i / pod == node_j / pod) return 3;
      return 5;
    }
    case TopoKind::Dragonfly: {
      std::int64_t router = spec.nodes_per_router;
      std::int64_t group = static_cast<std::int64_t>(spec.routers) * spec.nodes_per_router;
      if (node_i / router == node_j / router) return 1;
      if (node_i / group == node_j / group) return 2;
      return 3;
    }
  }
  return 0;
}

// --- decision symbols and affine cost expressions ---

struct SymbolTable {
  struct Sym {
    std::string name;
    double lower_bound_ns = 0;
  };
  std::vector<Sym> syms;
  std::map<std::string, int> index;

  int add(const std::string& name, double lb) {
    auto it = index.find(name);
    if (it != index.end()) return it->second;
    int id = static_cast<int>(syms.size());
    syms.push_back({name, lb});
    index.emplace(name, id);
    return id;
  }
  int find(const std::string& name) const {
    auto it = index.find(name);
    return it == index.end() ? -1 : it->second;
  }
  std::size_t size() const { return syms.size(); }
};

// Affine form c0 + sum(a_k * x_k); coefficients and constant nonnegative.
struct CostExpr {
  double c0 = 0;
  std::vector<std::pair<int, double>> terms;  // sorted by symbol id

  void add_term(int sym, double coeff) {
    if (coeff == 0) return;
    for (auto& [s, c] : terms)
      if (s == sym) {
        c += coeff;
        return;
      }
    terms.emplace_back(sym, coeff);
    std::sort(terms.begin(), terms.end());
  }
  CostExpr& operator+=(const CostExpr& o) {
    c0 += o.c0;
    for (auto [s, c] : o.terms) add_term(s, c);
    return *this;
  }
  double eval(const std::vector<double>& sym_values) const {
    double v = c0;
    for (auto [s, c] : terms) v += c * sym_values[static_cast<std::size_t>(s)];
    return v;
  }
  double coeff(int sym) const {
    for (auto [s, c] : terms)
      if (s == sym) return c;
    return 0;
  }
};

class CostModel {
public:
  CostModel(ModelConfig cfg, int num_ranks) : cfg_(std::move(cfg)), mode_(cost_mode(cfg_)) {
    switch (mode_) {
      case CostMode::Uniform:
        sym_l_ = table_.add("l", cfg_.params.L_ns);
        sym_g_ = table_.add("g_bw", cfg_.params.G_ns_per_byte);
        break;
      case CostMode::Topology: {
        const auto& t = *cfg_.topology;
        if (t.kind == TopoKind::FatTree3Tier && (t.k <= 0 || t.k % 2 != 0))
          throw ModelError("fat tree radix k must be positive and even");
        if (t.kind == TopoKind::Dragonfly &&
            (t.groups <= 0 || t.routers <= 0 || t.nodes_per_router <= 0))
          throw ModelError("dragonfly needs positive g/a/p");
        if (num_ranks > t.capacity())
          throw ModelError("rank count exceeds topology capacity");
        if (t.wire_classes) {
          if (t.kind != TopoKind::Dragonfly)
            throw ModelError("wire classes are a dragonfly refinement");
          sym_l_tc_ = table_.add("l_tc", t.wire_classes->l_tc_ns);
          sym_l_intra_ = table_.add("l_intra", t.wire_classes->l_intra_ns);
          sym_l_inter_ = table_.add("l_inter", t.wire_classes->l_inter_ns);
        } else {
          sym_lwire_ = table_.add("l_wire", t.l_wire_ns);
        }
        sym_dswitch_ = table_.add("d_switch", t.d_switch_ns);
        sym_g_ = table_.add("g_bw", cfg_.params.G_ns_per_byte);
        break;
      }
      case CostMode::Heterogeneous: {
        const auto& h = *cfg_.heterogeneous;
        int p = static_cast<int>(h.L_matrix_ns.size());
        if (p < num_ranks) throw ModelError("heterogeneous matrices smaller than rank count");
        auto check = [&](const std::vector<std::vector<double>>& m, const char* what) {
          if (static_cast<int>(m.size()) != p) throw ModelError(std::string(what) + " not square");
          for (int i = 0; i < p; ++i) {
            if (static_cast<int>(m[static_cast<std::size_t>(i)].size()) != p)
              throw ModelError(std::string(what) + " not square");
            for (int j = 0; j < p; ++j) {
              double v = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
              if (v < 0) throw ModelError(std::string(what) + " has a negative entry");
              if (v != m[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)])
                throw ModelError(std::string(what) + " not symmetric");
            }
          }
        };
        check(h.L_matrix_ns, "L_matrix");
        check(h.G_matrix_ns_per_b, "G_matrix");
        pair_l_.assign(static_cast<std::size_t>(p) * static_cast<std::size_t>(p), -1);
        pair_g_.assign(static_cast<std::size_t>(p) * static_cast<std::size_t>(p), -1);
        hetero_p_ = p;
        for (int i = 0; i < p; ++i)
          for (int j = i + 1; j < p; ++j) {
            int sl = table_.add("l_" + std::to_string(i) + "_" + std::to_string(j),
                                h.L_matrix_ns[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            int sg = table_.add("g_" + std::to_string(i) + "_" + std::to_string(j),
                                h.G_matrix_ns_per_b[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
            pair_l_[static_cast<std::size_t>(i * p + j)] = sl;
            pair_l_[static_cast<std::size_t>(j * p + i)] = sl;
            pair_g_[static_cast<std::size_t>(i * p + j)] = sg;
            pair_g_[static_cast<std::size_t>(j * p + i)] = sg;
          }
        break;
      }
    }
  }

  const ModelConfig& config() const { return cfg_; }
  CostMode mode() const { return mode_; }
  const SymbolTable& symbols() const { return table_; }
  int latency_symbol() const {
    switch (mode_) {
      case CostMode::Uniform: return sym_l_;
      case CostMode::Topology: return sym_lwire_ >= 0 ? sym_lwire_ : sym_l_tc_;
      case CostMode::Heterogeneous: return -1;
    }
    return -1;
  }
  int bandwidth_symbol() const { return sym_g_; }
  int d_switch_symbol() const { return sym_dswitch_; }
  int pair_latency_symbol(int i, int j) const {
    return pair_l_[static_cast<std::size_t>(i * hetero_p_ + j)];
  }
  int pair_bandwidth_symbol(int i, int j) const {
    return pair_g_[static_cast<std::size_t>(i * hetero_p_ + j)];
  }

  std::vector<double> lower_bounds() const {
    std::vector<double> out;
    out.reserve(table_.size());
    for (const auto& s : table_.syms) out.push_back(s.lower_bound_ns);
    return out;
  }

  // Latency term for a message between ranks i and j.
  CostExpr latency_expr(int rank_i, int rank_j) const {
    CostExpr e;
    switch (mode_) {
      case CostMode::Uniform:
        e.add_term(sym_l_, 1);
        break;
      case CostMode::Topology: {
        int h = hops(*cfg_.topology, rank_i, rank_j);
        if (cfg_.topology->wire_classes) {
          // wires per hop class: [tc, intra, inter, tc] along the path
          int n_tc = h >= 1 ? 2 : 0;
          int n_intra = h >= 2 ? 1 : 0;
          int n_inter = h >= 3 ? 1 : 0;
          e.add_term(sym_l_tc_, n_tc);
          e.add_term(sym_l_intra_, n_intra);
          e.add_term(sym_l_inter_, n_inter);
        } else {
          e.add_term(sym_lwire_, h + 1);
        }
        e.add_term(sym_dswitch_, h);
        break;
      }
      case CostMode::Heterogeneous:
        e.add_term(pair_latency_symbol(rank_i, rank_j), 1);
        break;
    }
    return e;
  }

  CostExpr bandwidth_expr(int rank_i, int rank_j, std::int64_t size) const {
    CostExpr e;
    double s1 = size > 0 ? static_cast<double>(size - 1) : 0.0;
    if (s1 == 0) return e;
    if (mode_ == CostMode::Heterogeneous)
      e.add_term(pair_bandwidth_symbol(rank_i, rank_j), s1);
    else
      e.add_term(sym_g_, s1);
    return e;
  }

  // has_local_pred matters only for rendezvous sends: a send with no local
  // predecessor carries its own o + L synchronization term.
  CostExpr vertex_cost(const Vertex& v, bool has_local_pred = true) const {
    CostExpr e;
    if (v.kind == VertexKind::Calc) {
      e.c0 = static_cast<double>(v.cost);
      return e;
    }
    if (v.kind == VertexKind::Send && v.rendezvous) {
      // completion = match time + L + (s-1)G (RDMA read)
      e = latency_expr(v.rank, v.peer);
      e += bandwidth_expr(v.rank, v.peer, v.size);
      if (cfg_.rv_fin_latency) e += latency_expr(v.rank, v.peer);
      if (!has_local_pred) {
        e.c0 += cfg_.params.o_ns;
        e += latency_expr(v.rank, v.peer);
      }
      return e;
    }
    e.c0 = cfg_.params.o_ns;
    return e;
  }

  CostExpr edge_cost(const Edge& edge, const ExecutionGraph& g) const {
    CostExpr e;
    const auto& dv = g.vertex(edge.dst);
    switch (edge.kind) {
      case EdgeKind::Local:
        if (dv.kind == VertexKind::Send && dv.rendezvous) {
          // sender readiness -> match time: o + L
          e.c0 = cfg_.params.o_ns;
          e += latency_expr(dv.rank, dv.peer);
        } else if (cfg_.strict_g && edge.adjacent_injection && cfg_.params.g_ns) {
          e.c0 = std::max(0.0, *cfg_.params.g_ns - cfg_.params.o_ns);
        }
        break;
      case EdgeKind::Virtual:
        // receiver readiness -> match time: o
        e.c0 = cfg_.params.o_ns;
        break;
      case EdgeKind::Comm: {
        if (edge.rendezvous) break;  // cost carried by the send vertex
        const auto& sv = g.vertex(edge.src);
        e = latency_expr(sv.rank, dv.rank);
        e += bandwidth_expr(sv.rank, dv.rank, edge.size);
        break;
      }
    }
    return e;
  }

private:
  ModelConfig cfg_;
  CostMode mode_;
  SymbolTable table_;
  int sym_l_ = -1, sym_g_ = -1;
  int sym_lwire_ = -1, sym_dswitch_ = -1;
  int sym_l_tc_ = -1, sym_l_intra_ = -1, sym_l_inter_ = -1;
  std::vector<int> pair_l_, pair_g_;
  int hetero_p_ = 0;
};

// Per-vertex and per-edge cost expressions for a graph; the single source
// consumed by the LP generator, the evaluator, the simulator, and the DP.
struct AssembledCosts {
  std::vector<CostExpr> vertex;  // by vertex id
  std::vector<CostExpr> edge;    // by edge index
};

inline AssembledCosts assemble_costs(const ExecutionGraph& g, const CostModel& cm) {
  AssembledCosts out;
  out.vertex.reserve(g.vertices.size());
  for (const auto& v : g.vertices) {
    bool has_local_pred = false;
    for (int ei : g.in_edges[static_cast<std::size_t>(v.id)])
      if (g.edges[static_cast<std::size_t>(ei)].kind == EdgeKind::Local) has_local_pred = true;
    out.vertex.push_back(cm.vertex_cost(v, has_local_pred));
  }
  out.edge.reserve(g.edges.size());
  for (const auto& e : g.edges) out.edge.push_back(cm.edge_cost(e, g));
  return out;
}

// --- model configuration file (JSON with declared units) ---

namespace detail {

inline double unit_scale_ns(const std::string& unit) {
  if (unit == "ns" || unit == "ns_per_byte") return 1.0;
  if (unit == "us" || unit == "us_per_byte") return 1e3;
  if (unit == "ms") return 1e6;
  if (unit == "s" || unit == "s_per_byte") return 1e9;
  throw ModelError("unknown unit '" + unit + "'");
}

inline double value_ns(const nlohmann::json& j, const char* field) {
  if (j.is_number()) return j.get<double>();  // bare numbers are nanoseconds
  if (j.is_object() && j.contains("value") && j.contains("unit"))
    return j["value"].get<double>() * unit_scale_ns(j["unit"].get<std::string>());
  if (j.is_array() && j.size() == 2)
    return j[0].get<double>() * unit_scale_ns(j[1].get<std::string>());
  throw ModelError(std::string("field '") + field + "': expected number or {value, unit}");
}

}  // namespace detail

inline ModelConfig parse_model_config(const nlohmann::json& j) {
  ModelConfig cfg;
  if (j.contains("L")) cfg.params.L_ns = detail::value_ns(j["L"], "L");
  if (j.contains("o")) cfg.params.o_ns = detail::value_ns(j["o"], "o");
  if (j.contains("g") && !j["g"].is_null()) cfg.params.g_ns = detail::value_ns(j["g"], "g");
  if (j.contains("G")) cfg.params.G_ns_per_byte = detail::value_ns(j["G"], "G");
  if (j.contains("P")) cfg.params.P = j["P"].get<int>();
  if (j.contains("S")) cfg.params.S = j["S"].get<std::int64_t>();
  if (j.contains("strict_g")) cfg.strict_g = j["strict_g"].get<bool>();
  if (j.contains("rv_fin_latency")) cfg.rv_fin_latency = j["rv_fin_latency"].get<bool>();
  if (cfg.params.L_ns < 0 || cfg.params.o_ns < 0 || cfg.params.G_ns_per_byte < 0 ||
      (cfg.params.g_ns && *cfg.params.g_ns < 0) || cfg.params.S < 0 || cfg.params.P < 1)
    throw ModelError("LogGPS parameters must be nonnegative and P >= 1");
  if (j.contains("topology") && !j["topology"].is_null()) {
    const auto& t = j["topology"];
    TopologySpec spec;
    std::string kind = t.value("kind", "flat");
    if (kind == "flat")
      spec.kind = TopoKind::Flat;
    else if (kind == "fat_tree")
      spec.kind = TopoKind::FatTree3Tier;
    else if (kind == "dragonfly")
      spec.kind = TopoKind::Dragonfly;
    else
      throw ModelError("unknown topology kind '" + kind + "'");
    spec.k = t.value("k", 0);
    spec.groups = t.value("groups", 0);
    spec.routers = t.value("routers", 0);
    spec.nodes_per_router = t.value("nodes_per_router", 0);
    if (t.contains("l_wire")) spec.l_wire_ns = detail::value_ns(t["l_wire"], "l_wire");
    if (t.contains("d_switch")) spec.d_switch_ns = detail::value_ns(t["d_switch"], "d_switch");
    if (t.contains("wire_classes") && !t["wire_classes"].is_null()) {
      WireClasses wc;
      const auto& w = t["wire_classes"];
      if (w.contains("l_tc")) wc.l_tc_ns = detail::value_ns(w["l_tc"], "l_tc");
      if (w.contains("l_intra")) wc.l_intra_ns = detail::value_ns(w["l_intra"], "l_intra");
      if (w.contains("l_inter")) wc.l_inter_ns = detail::value_ns(w["l_inter"], "l_inter");
      spec.wire_classes = wc;
    }
    if (spec.l_wire_ns < 0 || spec.d_switch_ns < 0)
      throw ModelError("l_wire and d_switch must be nonnegative");
    cfg.topology = spec;
  }
  if (j.contains("heterogeneous") && !j["heterogeneous"].is_null()) {
    const auto& h = j["heterogeneous"];
    HeterogeneousParams het;
    het.L_matrix_ns = h.at("L_matrix").get<std::vector<std::vector<double>>>();
    het.G_matrix_ns_per_b = h.at("G_matrix").get<std::vector<std::vector<double>>>();
    cfg.heterogeneous = het;
  }
  return cfg;
}

inline ModelConfig parse_model_config(const std::string& text) {
  return parse_model_config(nlohmann::json::parse(text));
}

}  // namespace netsens
