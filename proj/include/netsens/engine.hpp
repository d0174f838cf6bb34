#pragma once

// Linear program generation from execution graphs and a parametric solver
// specialized for the structure these programs have: the objective t is the
// pointwise max of affine functions of the latency/bandwidth symbols, so the
// optimum sits at the symbol lower bounds and sensitivities are directional
// derivatives of a convex piecewise-linear function. No simplex needed.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <iomanip>
#include <optional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "netsens/costmodel.hpp"
#include "netsens/graph.hpp"

namespace netsens {

struct LpObjective {
  enum class Kind { MinimizeT, MaximizeSymbol };
  Kind kind = Kind::MinimizeT;
  int sym = -1;              // symbol being maximized (tolerance question)
  double threshold_ns = 0;   // bound on t in MaximizeSymbol mode
};

struct LpModel {
  SymbolTable symbols;
  int num_aux = 0;
  // lhs >= rhs.expr + y_{rhs_aux}; lhs == kT refers to the makespan variable.
  static constexpr int kT = -1;
  struct Constraint {
    int lhs = kT;
    CostExpr rhs;
    int rhs_aux = -1;
  };
  std::vector<Constraint> constraints;
  LpObjective objective;
};

namespace detail {

// Effective in-edges for LP purposes. A rendezvous receive whose local
// predecessors all forward through virtual edges into the matched send is
// dominated by the path via the send, so only the zero-cost message edge
// remains and no max variable is needed for it.
inline std::vector<int> effective_in_edges(const ExecutionGraph& g, int v) {
  const auto& ins = g.in_edges[static_cast<std::size_t>(v)];
  const Vertex& vx = g.vertex(v);
  if (vx.kind == VertexKind::Recv && vx.rendezvous) {
    int comm = -1;
    for (int ei : ins)
      if (g.edges[static_cast<std::size_t>(ei)].kind == EdgeKind::Comm) comm = ei;
    if (comm >= 0) {
      int send = g.edges[static_cast<std::size_t>(comm)].src;
      bool prunable = true;
      for (int ei : ins) {
        const Edge& e = g.edges[static_cast<std::size_t>(ei)];
        if (e.kind != EdgeKind::Local) continue;
        bool forwarded = false;
        for (int oi : g.out_edges[static_cast<std::size_t>(e.src)]) {
          const Edge& oe = g.edges[static_cast<std::size_t>(oi)];
          if (oe.kind == EdgeKind::Virtual && oe.dst == send) forwarded = true;
        }
        if (!forwarded) prunable = false;
      }
      if (prunable) return {comm};
    }
  }
  return ins;
}

struct Aff {
  CostExpr expr;
  int y = -1;  // aux variable carried with coefficient 1, or -1
};

}  // namespace detail

inline LpModel build_lp(const ExecutionGraph& g, const CostModel& cm,
                        LpObjective objective = {}) {
  AssembledCosts ac = assemble_costs(g, cm);
  LpModel m;
  m.symbols = cm.symbols();
  m.objective = objective;
  std::vector<detail::Aff> completion(g.vertices.size());
  for (int v : g.topo_order) {
    auto ins = detail::effective_in_edges(g, v);
    detail::Aff tv;
    if (ins.empty()) {
      tv.expr = ac.vertex[static_cast<std::size_t>(v)];
    } else if (ins.size() == 1) {
      const Edge& e = g.edges[static_cast<std::size_t>(ins[0])];
      tv = completion[static_cast<std::size_t>(e.src)];
      tv.expr += ac.edge[static_cast<std::size_t>(ins[0])];
      tv.expr += ac.vertex[static_cast<std::size_t>(v)];
    } else {
      int y = m.num_aux++;
      for (int ei : ins) {
        const Edge& e = g.edges[static_cast<std::size_t>(ei)];
        const auto& tu = completion[static_cast<std::size_t>(e.src)];
        LpModel::Constraint c;
        c.lhs = y;
        c.rhs = tu.expr;
        c.rhs += ac.edge[static_cast<std::size_t>(ei)];
        c.rhs_aux = tu.y;
        m.constraints.push_back(std::move(c));
      }
      tv.expr = ac.vertex[static_cast<std::size_t>(v)];
      tv.y = y;
    }
    completion[static_cast<std::size_t>(v)] = std::move(tv);
  }
  for (const auto& vx : g.vertices) {
    if (!g.out_edges[static_cast<std::size_t>(vx.id)].empty()) continue;
    const auto& tv = completion[static_cast<std::size_t>(vx.id)];
    LpModel::Constraint c;
    c.lhs = LpModel::kT;
    c.rhs = tv.expr;
    c.rhs_aux = tv.y;
    m.constraints.push_back(std::move(c));
  }
  return m;
}

// --- parametric evaluation ---

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool approx_eq(double a, double b, double rel = 1e-9) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace detail

// Makespan t at the given symbol values (constraints are emitted in
// dependency order, so one forward pass suffices).
inline double lp_value(const LpModel& m, const std::vector<double>& x) {
  std::vector<double> ys(static_cast<std::size_t>(m.num_aux), detail::kNegInf);
  double t = detail::kNegInf;
  for (const auto& c : m.constraints) {
    double v = c.rhs.eval(x);
    if (c.rhs_aux >= 0) v += ys[static_cast<std::size_t>(c.rhs_aux)];
    if (c.lhs == LpModel::kT)
      t = std::max(t, v);
    else
      ys[static_cast<std::size_t>(c.lhs)] = std::max(ys[static_cast<std::size_t>(c.lhs)], v);
  }
  return t == detail::kNegInf ? 0.0 : t;
}

struct ValueSlope {
  double value = 0;
  double slope = 0;  // right derivative of t along the probed direction
};

// Directional right-derivative: all symbols in `dir` move together.
inline ValueSlope lp_value_slope(const LpModel& m, const std::vector<double>& x,
                                 const std::vector<int>& dir) {
  auto better = [](double v, double s, double bv, double bs) {
    if (v > bv && !detail::approx_eq(v, bv)) return true;
    if (detail::approx_eq(v, bv)) return s > bs;  // ties break toward larger slope
    return false;
  };
  std::vector<double> yv(static_cast<std::size_t>(m.num_aux), detail::kNegInf);
  std::vector<double> ysl(static_cast<std::size_t>(m.num_aux), 0.0);
  double tv = detail::kNegInf, tsl = 0;
  for (const auto& c : m.constraints) {
    double v = c.rhs.eval(x);
    double s = 0;
    for (int d : dir) s += c.rhs.coeff(d);
    if (c.rhs_aux >= 0) {
      v += yv[static_cast<std::size_t>(c.rhs_aux)];
      s += ysl[static_cast<std::size_t>(c.rhs_aux)];
    }
    if (c.lhs == LpModel::kT) {
      if (tv == detail::kNegInf || better(v, s, tv, tsl)) {
        tv = v;
        tsl = s;
      }
    } else {
      auto& bv = yv[static_cast<std::size_t>(c.lhs)];
      auto& bs = ysl[static_cast<std::size_t>(c.lhs)];
      if (bv == detail::kNegInf || better(v, s, bv, bs)) {
        bv = v;
        bs = s;
      }
    }
  }
  if (tv == detail::kNegInf) return {0.0, 0.0};
  return {tv, tsl};
}

inline ValueSlope lp_value_slope(const LpModel& m, const std::vector<double>& x, int sym) {
  return lp_value_slope(m, x, std::vector<int>{sym});
}

// Interval [fl, fu] of values of one symbol over which the makespan keeps the
// same slope it has at x[sym] (other symbols held fixed). Exact up to line
// intersections because t is piecewise linear with integer slopes.
struct SymbolRange {
  double fl = 0;
  double fu = 0;
};

// Directional ranging: coordinate t shifts every symbol in `dir` by t - t0
// from its current value; the walk keeps all symbols nonnegative.
inline SymbolRange symbol_range(const LpModel& m, std::vector<double> x,
                                const std::vector<int>& dir, double t0) {
  std::vector<double> orig;
  double min_orig = detail::kInf;
  for (int d : dir) {
    orig.push_back(x[static_cast<std::size_t>(d)]);
    min_orig = std::min(min_orig, x[static_cast<std::size_t>(d)]);
  }
  const double t_lo = t0 - min_orig;
  const double x0 = t0;
  auto probe = [&](double t) {
    for (std::size_t i = 0; i < dir.size(); ++i)
      x[static_cast<std::size_t>(dir[i])] = orig[i] + (t - t0);
    return lp_value_slope(m, x, dir);
  };
  ValueSlope base = probe(x0);
  const double lam = base.slope;
  auto on_line = [&](double v, double tval) {
    double line = base.value + lam * (v - x0);
    return detail::approx_eq(tval, line, 1e-9);
  };
  SymbolRange r;
  // upper end: walk line intersections from a far-right probe
  double hi = std::max(x0 * 4 + 1.0, 1e12);
  ValueSlope ph = probe(hi);
  if (detail::approx_eq(ph.slope, lam) && on_line(hi, ph.value)) {
    r.fu = detail::kInf;
  } else {
    double xc = hi;
    ValueSlope pc = ph;
    for (int it = 0; it < 256; ++it) {
      if (detail::approx_eq(pc.slope, lam) && on_line(xc, pc.value)) break;
      double denom = pc.slope - lam;
      if (denom <= 0) break;  // numerical guard; convexity gives denom > 0 here
      double xn = (base.value - lam * x0 - (pc.value - pc.slope * xc)) / denom;
      if (xn >= xc) break;
      xc = xn;
      pc = probe(xc);
    }
    r.fu = xc;
  }
  // lower end: same walk from the leftmost admissible point
  ValueSlope p0 = probe(t_lo);
  if (on_line(t_lo, p0.value) && detail::approx_eq(p0.slope, lam)) {
    r.fl = t_lo;
  } else {
    double xc = t_lo;
    ValueSlope pc = p0;
    for (int it = 0; it < 256; ++it) {
      if (on_line(xc, pc.value)) break;
      double denom = lam - pc.slope;
      if (denom <= 0) break;
      double xn = (pc.value - pc.slope * xc - (base.value - lam * x0)) / denom;
      if (xn <= xc) break;
      xc = xn;
      pc = probe(xc);
    }
    r.fl = std::max(t_lo, xc);
  }
  return r;
}

inline SymbolRange symbol_range(const LpModel& m, const std::vector<double>& x, int sym) {
  return symbol_range(m, x, std::vector<int>{sym}, x[static_cast<std::size_t>(sym)]);
}

// --- solving ---

struct SolveResult {
  bool feasible = true;
  bool unbounded = false;        // MaximizeSymbol with no binding path
  double objective_ns = 0;       // t, or the maximized symbol value
  std::vector<double> symbol_values;
  std::vector<double> reduced_costs;   // dt/dsymbol at the optimum (MinimizeT)
  std::vector<int> tight_constraints;  // constraint indices binding at optimum
};

namespace detail {

inline std::vector<int> tight_constraints(const LpModel& m, const std::vector<double>& x) {
  std::vector<double> ys(static_cast<std::size_t>(m.num_aux), kNegInf);
  double t = kNegInf;
  std::vector<double> vals;
  vals.reserve(m.constraints.size());
  for (const auto& c : m.constraints) {
    double v = c.rhs.eval(x);
    if (c.rhs_aux >= 0) v += ys[static_cast<std::size_t>(c.rhs_aux)];
    vals.push_back(v);
    if (c.lhs == LpModel::kT)
      t = std::max(t, v);
    else
      ys[static_cast<std::size_t>(c.lhs)] = std::max(ys[static_cast<std::size_t>(c.lhs)], v);
  }
  std::vector<int> out;
  for (std::size_t i = 0; i < m.constraints.size(); ++i) {
    double lhs = m.constraints[i].lhs == LpModel::kT
                     ? t
                     : ys[static_cast<std::size_t>(m.constraints[i].lhs)];
    if (approx_eq(vals[i], lhs)) out.push_back(static_cast<int>(i));
  }
  return out;
}

}  // namespace detail

inline SolveResult solve(const LpModel& m) {
  SolveResult res;
  std::vector<double> x;
  x.reserve(m.symbols.size());
  for (const auto& s : m.symbols.syms) x.push_back(s.lower_bound_ns);
  if (m.objective.kind == LpObjective::Kind::MinimizeT) {
    res.objective_ns = lp_value(m, x);
    res.symbol_values = x;
    res.reduced_costs.resize(m.symbols.size());
    for (int s = 0; s < static_cast<int>(m.symbols.size()); ++s)
      res.reduced_costs[static_cast<std::size_t>(s)] = lp_value_slope(m, x, s).slope;
    res.tight_constraints = detail::tight_constraints(m, x);
    return res;
  }
  // MaximizeSymbol: largest value of one symbol keeping t within threshold.
  const int sym = m.objective.sym;
  const double thr = m.objective.threshold_ns;
  auto probe = [&](double v) {
    x[static_cast<std::size_t>(sym)] = v;
    return lp_value_slope(m, x, sym);
  };
  ValueSlope at0 = probe(0.0);
  if (at0.value > thr && !detail::approx_eq(at0.value, thr)) {
    res.feasible = false;
    return res;
  }
  // Grow the bracket from below so Newton starts near the root; starting at
  // a huge x loses the low-order digits of t(x) to rounding.
  double hi = 1.0;
  ValueSlope ph = probe(hi);
  while (ph.value <= thr && hi < 1e17) {
    hi *= 4;
    ph = probe(hi);
  }
  if (ph.value <= thr) {
    res.unbounded = true;
    res.objective_ns = detail::kInf;
    return res;
  }
  // Newton from the right on convex increasing t(x); lands on the root exactly
  // once inside the final linear segment.
  double xc = hi;
  ValueSlope pc = ph;
  for (int it = 0; it < 256; ++it) {
    if (pc.value <= thr) break;  // Newton from the right never undershoots
    if (pc.slope <= 0) break;
    double xn = xc - (pc.value - thr) / pc.slope;
    if (xn >= xc) break;
    xc = std::max(0.0, xn);
    pc = probe(xc);
  }
  res.objective_ns = xc;
  x[static_cast<std::size_t>(sym)] = xc;
  res.symbol_values = x;
  res.tight_constraints = detail::tight_constraints(m, x);
  return res;
}

// --- LP text export / import (CPLEX LP subset, values in nanoseconds) ---

namespace detail {

inline std::string fmt_num(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void append_term(std::ostringstream& os, double coeff, const std::string& name) {
  if (coeff >= 0)
    os << " + ";
  else {
    os << " - ";
    coeff = -coeff;
  }
  if (!approx_eq(coeff, 1.0)) os << fmt_num(coeff) << " ";
  os << name;
}

}  // namespace detail

inline std::string export_lp(const LpModel& m) {
  std::ostringstream os;
  os << "\\ execution-graph makespan model, all values in nanoseconds\n";
  bool tol = m.objective.kind == LpObjective::Kind::MaximizeSymbol;
  if (tol)
    os << "Maximize\n obj: "
       << m.symbols.syms[static_cast<std::size_t>(m.objective.sym)].name << "\n";
  else
    os << "Minimize\n obj: t\n";
  os << "Subject To\n";
  int cid = 0;
  for (const auto& c : m.constraints) {
    os << " c" << cid++ << ": ";
    os << (c.lhs == LpModel::kT ? std::string("t") : "y" + std::to_string(c.lhs));
    if (c.rhs_aux >= 0) os << " - y" << c.rhs_aux;
    for (auto [s, coeff] : c.rhs.terms)
      detail::append_term(os, -coeff, m.symbols.syms[static_cast<std::size_t>(s)].name);
    os << " >= " << detail::fmt_num(c.rhs.c0) << "\n";
  }
  if (tol) os << " c" << cid++ << ": t <= " << detail::fmt_num(m.objective.threshold_ns) << "\n";
  os << "Bounds\n";
  for (const auto& s : m.symbols.syms)
    os << " " << s.name << " >= " << detail::fmt_num(s.lower_bound_ns) << "\n";
  os << "End\n";
  return os.str();
}

namespace detail {

inline std::vector<std::string> lp_tokens(const std::string& text) {
  std::vector<std::string> toks;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line[0] == '\\') continue;
    std::istringstream ls(line);
    std::string t;
    while (ls >> t) toks.push_back(t);
  }
  return toks;
}

}  // namespace detail

// Parses the subset of the LP format produced by export_lp.
inline LpModel parse_lp(const std::string& text) {
  auto toks = detail::lp_tokens(text);
  LpModel m;
  std::size_t i = 0;
  auto expect = [&](const std::string& w) {
    if (i >= toks.size() || toks[i] != w)
      throw ParseError("lp: expected '" + w + "'");
    ++i;
  };
  bool maximize = false;
  if (i < toks.size() && toks[i] == "Maximize") {
    maximize = true;
    ++i;
  } else {
    expect("Minimize");
  }
  expect("obj:");
  std::string objvar = toks[i++];
  expect("Subject");
  expect("To");
  auto sym_id = [&](const std::string& name) { return m.symbols.add(name, 0); };
  std::optional<double> threshold;
  while (i < toks.size() && toks[i] != "Bounds" && toks[i] != "End") {
    if (toks[i].back() != ':') throw ParseError("lp: expected constraint label");
    ++i;
    // terms up to >= / <=
    struct Term {
      double coeff;
      std::string var;
    };
    std::vector<Term> terms;
    double sign = 1;
    std::string sense;
    while (i < toks.size()) {
      const std::string& t = toks[i];
      if (t == ">=" || t == "<=") {
        sense = t;
        ++i;
        break;
      }
      if (t == "+") {
        sign = 1;
        ++i;
        continue;
      }
      if (t == "-") {
        sign = -1;
        ++i;
        continue;
      }
      char* end = nullptr;
      double num = std::strtod(t.c_str(), &end);
      if (end && *end == '\0') {
        // numeric coefficient; next token is the variable
        ++i;
        if (i >= toks.size()) throw ParseError("lp: dangling coefficient");
        terms.push_back({sign * num, toks[i++]});
      } else {
        terms.push_back({sign, t});
        ++i;
      }
      sign = 1;
    }
    if (sense.empty() || i >= toks.size()) throw ParseError("lp: truncated constraint");
    double rhs_const = std::strtod(toks[i++].c_str(), nullptr);
    if (sense == "<=") {
      if (terms.size() != 1 || terms[0].var != "t")
        throw ParseError("lp: only 't <= threshold' upper constraints supported");
      threshold = rhs_const;
      continue;
    }
    LpModel::Constraint c;
    c.rhs.c0 = rhs_const;
    bool have_lhs = false;
    for (const auto& t : terms) {
      bool positive = t.coeff > 0;
      if (t.var == "t") {
        if (!positive || have_lhs) throw ParseError("lp: malformed t constraint");
        c.lhs = LpModel::kT;
        have_lhs = true;
      } else if (t.var[0] == 'y' && t.var.find_first_not_of("0123456789", 1) == std::string::npos) {
        int id = std::stoi(t.var.substr(1));
        m.num_aux = std::max(m.num_aux, id + 1);
        if (positive) {
          if (have_lhs) throw ParseError("lp: two lhs variables");
          c.lhs = id;
          have_lhs = true;
        } else {
          if (c.rhs_aux >= 0) throw ParseError("lp: two rhs aux variables");
          c.rhs_aux = id;
        }
      } else {
        c.rhs.add_term(sym_id(t.var), -t.coeff);
      }
    }
    if (!have_lhs) throw ParseError("lp: constraint without lhs variable");
    m.constraints.push_back(std::move(c));
  }
  if (i < toks.size() && toks[i] == "Bounds") {
    ++i;
    while (i < toks.size() && toks[i] != "End") {
      std::string name = toks[i++];
      if (i + 1 >= toks.size() || toks[i] != ">=") throw ParseError("lp: malformed bound");
      ++i;
      double lb = std::strtod(toks[i++].c_str(), nullptr);
      m.symbols.syms[static_cast<std::size_t>(sym_id(name))].lower_bound_ns = lb;
    }
  }
  if (maximize) {
    m.objective.kind = LpObjective::Kind::MaximizeSymbol;
    m.objective.sym = m.symbols.find(objvar);
    if (m.objective.sym < 0) throw ParseError("lp: objective symbol never used");
    if (!threshold) throw ParseError("lp: Maximize without a t threshold");
    m.objective.threshold_ns = *threshold;
  } else if (objvar != "t") {
    throw ParseError("lp: Minimize objective must be t");
  }
  return m;
}

}  // namespace netsens
