#pragma once

// Independent cross-check routes for the LP engine: an event-driven replay of
// the execution graph and a per-vertex dynamic program that tracks completion
// time as an explicit piecewise-linear function of one symbol.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "netsens/costmodel.hpp"
#include "netsens/graph.hpp"

namespace netsens {

class OracleError : public std::runtime_error {
public:
  explicit OracleError(const std::string& msg) : std::runtime_error(msg) {}
};

// --- event-driven simulation ---

struct SimResult {
  double makespan_ns = 0;
  std::vector<double> start_ns;  // by vertex id
  std::vector<double> end_ns;
  bool deadlocked = false;
  std::vector<int> stuck_vertices;  // never became ready
};

// Replays the graph with a ready-queue keyed on start time. Computes the same
// quantity as the LP objective through entirely different machinery, which is
// what makes it useful as a check.
inline SimResult simulate(const ExecutionGraph& g, const AssembledCosts& ac,
                          const std::vector<double>& sym_values) {
  const std::size_t n = g.vertices.size();
  SimResult res;
  res.start_ns.assign(n, 0.0);
  res.end_ns.assign(n, 0.0);
  std::vector<int> pending(n, 0);
  std::vector<double> ready_at(n, 0.0);
  using Item = std::pair<double, int>;  // (start time, vertex), min-heap
  std::priority_queue<Item, std::vector<Item>, std::greater<>> q;
  for (std::size_t v = 0; v < n; ++v) {
    pending[v] = static_cast<int>(g.in_edges[v].size());
    if (pending[v] == 0) q.emplace(0.0, static_cast<int>(v));
  }
  std::size_t done = 0;
  while (!q.empty()) {
    auto [start, v] = q.top();
    q.pop();
    res.start_ns[static_cast<std::size_t>(v)] = start;
    double end = start + ac.vertex[static_cast<std::size_t>(v)].eval(sym_values);
    res.end_ns[static_cast<std::size_t>(v)] = end;
    res.makespan_ns = std::max(res.makespan_ns, end);
    ++done;
    for (int ei : g.out_edges[static_cast<std::size_t>(v)]) {
      const Edge& e = g.edges[static_cast<std::size_t>(ei)];
      double arrive = end + ac.edge[static_cast<std::size_t>(ei)].eval(sym_values);
      auto d = static_cast<std::size_t>(e.dst);
      ready_at[d] = std::max(ready_at[d], arrive);
      if (--pending[d] == 0) q.emplace(ready_at[d], e.dst);
    }
  }
  if (done != n) {
    res.deadlocked = true;
    for (std::size_t v = 0; v < n; ++v)
      if (pending[v] > 0) res.stuck_vertices.push_back(static_cast<int>(v));
  }
  return res;
}

inline std::string timeline_csv(const ExecutionGraph& g, const SimResult& sim) {
  std::ostringstream os;
  os << "vertex_id,rank,kind,t_start_ns,t_end_ns\n";
  for (const auto& v : g.vertices) {
    const char* kind = v.kind == VertexKind::Calc ? "calc"
                       : v.kind == VertexKind::Send ? "send"
                                                    : "recv";
    os << v.id << ',' << v.rank << ',' << kind << ','
       << sim.start_ns[static_cast<std::size_t>(v.id)] << ','
       << sim.end_ns[static_cast<std::size_t>(v.id)] << '\n';
  }
  return os.str();
}

// --- piecewise-linear dynamic program over one symbol ---

// Upper envelope of lines slope*x + offset for x >= 0.
struct PiecewiseLinear {
  struct Line {
    double slope = 0;
    double offset = 0;
  };
  std::vector<Line> lines;  // hull order: increasing slope

  double value(double x) const {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& l : lines) best = std::max(best, l.slope * x + l.offset);
    return best;
  }
  double slope_at(double x) const {  // right derivative
    double best = -std::numeric_limits<double>::infinity(), s = 0;
    for (const auto& l : lines) {
      double v = l.slope * x + l.offset;
      if (v > best + 1e-9 * std::max(1.0, std::fabs(best)) ||
          (std::fabs(v - best) <= 1e-9 * std::max(1.0, std::fabs(best)) && l.slope > s)) {
        best = v;
        s = l.slope;
      }
    }
    return s;
  }
  // x coordinates (> 0) where the envelope changes slope
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
      double x = (lines[i].offset - lines[i + 1].offset) /
                 (lines[i + 1].slope - lines[i].slope);
      if (x > 0) out.push_back(x);
    }
    return out;
  }
};

namespace detail {

// drop (a, C) pairs with another pair at a' >= a and C' >= C (max envelope)
inline void pareto_prune(std::vector<PiecewiseLinear::Line>& ls) {
  std::sort(ls.begin(), ls.end(), [](const auto& a, const auto& b) {
    return a.slope != b.slope ? a.slope < b.slope : a.offset < b.offset;
  });
  std::vector<PiecewiseLinear::Line> out;
  double best_offset = -std::numeric_limits<double>::infinity();
  for (auto it = ls.rbegin(); it != ls.rend(); ++it) {
    // scanning slopes descending: survivors need strictly growing offsets
    if (it->offset > best_offset) {
      out.push_back(*it);
      best_offset = it->offset;
    }
  }
  std::reverse(out.begin(), out.end());
  ls = std::move(out);
}

// upper-envelope hull for x >= 0 (input sorted by slope, offsets pareto-pruned)
inline void hull_prune(std::vector<PiecewiseLinear::Line>& ls) {
  std::vector<PiecewiseLinear::Line> hull;
  auto cross_x = [](const PiecewiseLinear::Line& a, const PiecewiseLinear::Line& b) {
    return (a.offset - b.offset) / (b.slope - a.slope);
  };
  for (const auto& l : ls) {
    while (!hull.empty()) {
      const auto& last = hull.back();
      if (l.slope == last.slope) {
        hull.pop_back();  // pareto prune kept the higher offset last
        continue;
      }
      double x = cross_x(last, l);
      if (x <= 0) {
        hull.pop_back();
        continue;
      }
      if (hull.size() >= 2 && cross_x(hull[hull.size() - 2], last) >= x) {
        hull.pop_back();
        continue;
      }
      break;
    }
    hull.push_back(l);
  }
  ls = std::move(hull);
}

}  // namespace detail

// Completion-time envelope over one symbol, with the remaining symbols fixed.
// Exponential in pathological graphs, so guarded; intended for test oracles.
inline PiecewiseLinear dp_envelope(const ExecutionGraph& g, const AssembledCosts& ac,
                                   const std::vector<double>& sym_values, int sym) {
  if (g.vertices.size() > 50000)
    throw OracleError("dp_envelope: graph too large for the oracle route");
  auto as_line = [&](const CostExpr& e) {
    PiecewiseLinear::Line l;
    l.slope = e.coeff(sym);
    l.offset = e.eval(sym_values) - l.slope * sym_values[static_cast<std::size_t>(sym)];
    return l;
  };
  std::vector<std::vector<PiecewiseLinear::Line>> sets(g.vertices.size());
  std::vector<PiecewiseLinear::Line> sink_lines;
  for (int v : g.topo_order) {
    auto vline = as_line(ac.vertex[static_cast<std::size_t>(v)]);
    std::vector<PiecewiseLinear::Line>& mine = sets[static_cast<std::size_t>(v)];
    if (g.in_edges[static_cast<std::size_t>(v)].empty()) {
      mine.push_back(vline);
    } else {
      for (int ei : g.in_edges[static_cast<std::size_t>(v)]) {
        const Edge& e = g.edges[static_cast<std::size_t>(ei)];
        auto eline = as_line(ac.edge[static_cast<std::size_t>(ei)]);
        for (const auto& p : sets[static_cast<std::size_t>(e.src)])
          mine.push_back({p.slope + eline.slope + vline.slope,
                          p.offset + eline.offset + vline.offset});
      }
      detail::pareto_prune(mine);
      if (mine.size() > 20000)
        throw OracleError("dp_envelope: pareto set exploded");
    }
    if (g.out_edges[static_cast<std::size_t>(v)].empty())
      sink_lines.insert(sink_lines.end(), mine.begin(), mine.end());
  }
  detail::pareto_prune(sink_lines);
  detail::hull_prune(sink_lines);
  PiecewiseLinear pl;
  pl.lines = std::move(sink_lines);
  return pl;
}

}  // namespace netsens
