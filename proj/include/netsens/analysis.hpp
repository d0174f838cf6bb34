#pragma once

// Headline metrics on top of the LP engine: latency/bandwidth sensitivity,
// latency ratio, critical latencies over an interval, x% latency tolerance,
// and delta-L sweeps. Internally everything is nanoseconds.

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "netsens/engine.hpp"

namespace netsens {

struct AnalysisRecord {
  double delta_l_ns = 0;
  double T_ns = 0;
  double lambda_l = 0;        // messages' worth of latency on a critical path
  double lambda_g_bytes = 0;  // sum of (s-1) over critical message edges
  double rho_l = 0;           // latency share of the critical path, in [0, 1]
  double rho_l_paper = 0;     // reciprocal form as printed; 0 when undefined
  double fl_ns = 0;           // latency feasibility range (same slope)
  double fu_ns = 0;
};

struct ToleranceResult {
  double percent = 0;          // 0 for absolute-threshold queries
  double baseline_T_ns = 0;
  double threshold_ns = 0;
  double l_max_ns = 0;         // +inf when unbounded
  bool unbounded = false;
  bool feasible = true;
};

struct CriticalLatencies {
  std::vector<double> latencies_ns;  // ascending, deduplicated within eps
  int iterations = 0;
};

class Analyzer {
public:
  Analyzer(const ExecutionGraph& g, const CostModel& cm)
      : cm_(&cm), lp_(build_lp(g, cm)) {
    for (const auto& s : lp_.symbols.syms) base_x_.push_back(s.lower_bound_ns);
    switch (cm.mode()) {
      case CostMode::Uniform:
      case CostMode::Topology: {
        if (cm.latency_symbol() >= 0) lat_dir_.push_back(cm.latency_symbol());
        int intra = cm.symbols().find("l_intra");
        int inter = cm.symbols().find("l_inter");
        if (intra >= 0) lat_dir_.push_back(intra);
        if (inter >= 0) lat_dir_.push_back(inter);
        bw_dir_.push_back(cm.bandwidth_symbol());
        break;
      }
      case CostMode::Heterogeneous:
        for (int s = 0; s < static_cast<int>(cm.symbols().size()); ++s) {
          const auto& name = cm.symbols().syms[static_cast<std::size_t>(s)].name;
          (name.rfind("l_", 0) == 0 ? lat_dir_ : bw_dir_).push_back(s);
        }
        break;
    }
    base_l_ = lat_dir_.empty() ? 0.0 : base_x_[static_cast<std::size_t>(lat_dir_[0])];
  }

  const LpModel& lp() const { return lp_; }
  const CostModel& model() const { return *cm_; }
  double base_latency_ns() const { return base_l_; }

  // symbol values with every latency symbol shifted by delta (floored at 0)
  std::vector<double> values_at(double delta_ns) const {
    std::vector<double> x = base_x_;
    for (int s : lat_dir_)
      x[static_cast<std::size_t>(s)] =
          std::max(0.0, x[static_cast<std::size_t>(s)] + delta_ns);
    return x;
  }

  double predict(double delta_ns = 0) const { return lp_value(lp_, values_at(delta_ns)); }

  double latency_sensitivity(double delta_ns = 0) const {
    return lp_value_slope(lp_, values_at(delta_ns), lat_dir_).slope;
  }
  double bandwidth_sensitivity(double delta_ns = 0) const {
    return lp_value_slope(lp_, values_at(delta_ns), bw_dir_).slope;
  }

  AnalysisRecord analyze(double delta_ns = 0, bool with_range = true) const {
    AnalysisRecord r;
    r.delta_l_ns = delta_ns;
    auto x = values_at(delta_ns);
    auto vs = lp_value_slope(lp_, x, lat_dir_);
    r.T_ns = vs.value;
    r.lambda_l = vs.slope;
    r.lambda_g_bytes = lp_value_slope(lp_, x, bw_dir_).slope;
    fill_rho(r, x);
    if (with_range) {
      auto range = symbol_range(lp_, x, lat_dir_, base_l_ + delta_ns);
      r.fl_ns = range.fl;
      r.fu_ns = range.fu;
    } else {
      r.fl_ns = r.fu_ns = base_l_ + delta_ns;
    }
    return r;
  }

  std::vector<AnalysisRecord> sweep(const std::vector<double>& deltas_ns) const {
    std::vector<AnalysisRecord> out;
    out.reserve(deltas_ns.size());
    // ranging is the expensive part; points falling inside an already-known
    // range skip it, everything else is recomputed fresh per point
    std::optional<SymbolRange> known;
    for (double d : deltas_ns) {
      double l = base_l_ + d;
      if (known && l >= known->fl && l <= known->fu) {
        AnalysisRecord r;
        r.delta_l_ns = d;
        auto x = values_at(d);
        auto vs = lp_value_slope(lp_, x, lat_dir_);
        r.T_ns = vs.value;
        r.lambda_l = vs.slope;
        r.lambda_g_bytes = lp_value_slope(lp_, x, bw_dir_).slope;
        fill_rho(r, x);
        r.fl_ns = known->fl;
        r.fu_ns = known->fu;
        out.push_back(r);
      } else {
        auto r = analyze(d, true);
        known = SymbolRange{r.fl_ns, r.fu_ns};
        out.push_back(r);
      }
    }
    return out;
  }

  // Scans [l_min, l_max] from the top, hopping below each feasibility-range
  // floor; records a latency whenever the sensitivity changed across the hop.
  CriticalLatencies critical_latencies(double l_min_ns, double l_max_ns,
                                       double step_ns = 1000.0,
                                       double eps_ns = 1.0) const {
    if (l_min_ns > l_max_ns || step_ns <= 0 || eps_ns <= 0)
      throw std::invalid_argument("critical_latencies: invalid interval or step");
    CriticalLatencies res;
    std::optional<double> prev_lambda;
    double l = l_max_ns;
    for (int guard = 0; guard < 100000; ++guard) {
      ++res.iterations;
      double delta = l - base_l_;
      auto x = values_at(delta);
      auto vs = lp_value_slope(lp_, x, lat_dir_);
      auto range = symbol_range(lp_, x, lat_dir_, l);
      double fl = range.fl;
      bool record = false;
      if (prev_lambda) {
        record = !detail::approx_eq(vs.slope, *prev_lambda);
      } else if (fl > eps_ns) {
        // first solve: fl is a breakpoint only if the slope differs just below
        auto below = lp_value_slope(lp_, values_at(fl - eps_ns - base_l_), lat_dir_);
        record = !detail::approx_eq(below.slope, vs.slope);
        if (record) {
          res.latencies_ns.push_back(fl);
          prev_lambda = vs.slope;
          if (fl < l_min_ns) break;
          l = std::max(0.0, std::min(l - step_ns, fl - eps_ns));
          continue;
        }
      }
      if (record) res.latencies_ns.push_back(fl);
      prev_lambda = vs.slope;
      if (fl < l_min_ns) break;
      double next = std::max(0.0, std::min(l - step_ns, fl - eps_ns));
      if (next >= l) break;  // cannot advance further
      l = next;
    }
    std::sort(res.latencies_ns.begin(), res.latencies_ns.end());
    std::vector<double> dedup;
    for (double v : res.latencies_ns) {
      if (v < l_min_ns - eps_ns || v > l_max_ns + eps_ns) continue;
      if (dedup.empty() || v - dedup.back() > eps_ns) dedup.push_back(v);
    }
    res.latencies_ns = std::move(dedup);
    return res;
  }

  ToleranceResult latency_tolerance(double percent) const {
    double base_t = predict(0);
    ToleranceResult r = tolerance_threshold(base_t * (1.0 + percent / 100.0));
    r.percent = percent;
    return r;
  }

  ToleranceResult tolerance_threshold(double threshold_ns) const {
    ToleranceResult res;
    res.baseline_T_ns = predict(0);
    res.threshold_ns = threshold_ns;
    if (lat_dir_.size() == 1) {
      LpModel m = lp_;
      m.objective.kind = LpObjective::Kind::MaximizeSymbol;
      m.objective.sym = lat_dir_[0];
      m.objective.threshold_ns = threshold_ns;
      SolveResult s = solve(m);
      res.feasible = s.feasible;
      res.unbounded = s.unbounded;
      res.l_max_ns = s.objective_ns;
      return res;
    }
    // several latency symbols: invert the convex makespan along the shared
    // shift direction instead of a single-symbol objective
    auto t_at = [&](double l) { return lp_value_slope(lp_, values_at(l - base_l_), lat_dir_); };
    auto at0 = t_at(0.0);
    if (at0.value > threshold_ns && !detail::approx_eq(at0.value, threshold_ns)) {
      res.feasible = false;
      return res;
    }
    // grow the bracket from below so the Newton start is near the root and
    // t(x) still has full precision there
    double hi = 1.0;
    auto ph = t_at(hi);
    while (ph.value <= threshold_ns && hi < 1e17) {
      hi *= 4;
      ph = t_at(hi);
    }
    if (ph.value <= threshold_ns) {
      res.unbounded = true;
      res.l_max_ns = detail::kInf;
      return res;
    }
    double xc = hi;
    auto pc = ph;
    for (int it = 0; it < 256; ++it) {
      if (pc.value <= threshold_ns) break;  // Newton from the right never undershoots
      if (pc.slope <= 0) break;
      double xn = xc - (pc.value - threshold_ns) / pc.slope;
      if (xn >= xc) break;
      xc = std::max(0.0, xn);
      pc = t_at(xc);
    }
    res.l_max_ns = xc;
    return res;
  }

private:
  // latency share of the critical path: reduced-cost-weighted symbol values
  // over the makespan (collapses to L*lambda/T in the uniform model)
  void fill_rho(AnalysisRecord& r, const std::vector<double>& x) const {
    double contrib = 0;
    for (int s : lat_dir_)
      contrib += lp_value_slope(lp_, x, s).slope * x[static_cast<std::size_t>(s)];
    int dsw = cm_->d_switch_symbol();
    if (dsw >= 0)
      contrib += lp_value_slope(lp_, x, dsw).slope * x[static_cast<std::size_t>(dsw)];
    if (r.lambda_l <= 0 || r.T_ns <= 0 || contrib <= 0) {
      r.rho_l = 0;
      r.rho_l_paper = 0;
      return;
    }
    r.rho_l = std::min(1.0, contrib / r.T_ns);
    r.rho_l_paper = r.T_ns / contrib;
  }

  const CostModel* cm_;
  LpModel lp_;
  std::vector<double> base_x_;
  std::vector<int> lat_dir_, bw_dir_;
  double base_l_ = 0;
};

inline std::string records_csv(const std::vector<AnalysisRecord>& recs) {
  std::ostringstream os;
  os << "delta_l_us,T_s,lambda_l,lambda_g_bytes,rho_l,fl_us,fu_us\n";
  os.precision(12);
  for (const auto& r : recs)
    os << r.delta_l_ns / 1e3 << ',' << r.T_ns / 1e9 << ',' << r.lambda_l << ','
       << r.lambda_g_bytes << ',' << r.rho_l << ',' << r.fl_ns / 1e3 << ','
       << r.fu_ns / 1e3 << '\n';
  return os.str();
}

}  // namespace netsens
