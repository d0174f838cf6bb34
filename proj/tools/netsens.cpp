// Command-line front door: parse schedules or traces, run predictions,
// sweeps, tolerance and placement analyses, and emit CSV/JSON artifacts.
//
// Exit codes: 0 success, 1 validation/infeasible, 2 I/O error,
// 3 internal-consistency failure (oracle disagreement).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "netsens/analysis.hpp"
#include "netsens/frontend.hpp"
#include "netsens/oracle.hpp"
#include "netsens/placement.hpp"

namespace {

using nlohmann::json;

struct ExitWith {
  int code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ExitWith{2, "cannot open " + path};
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ExitWith{2, "cannot write " + path};
  out << content;
}

struct GlobalOpts {
  std::string config_path;
  std::vector<std::string> sets;
  std::string output;
  std::string dump_dot;
  bool no_timestamp = false;
  bool check = false;
  int jobs = 1;
  unsigned seed = 1;
};

json load_config_json(const GlobalOpts& g) {
  json cfg = json::object();
  if (!g.config_path.empty()) cfg = json::parse(read_file(g.config_path));
  for (const auto& kv : g.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ExitWith{1, "--set expects key=value, got " + kv};
    std::string key = kv.substr(0, eq), val = kv.substr(eq + 1);
    json* node = &cfg;
    std::size_t pos = 0;
    while (true) {
      auto dot = key.find('.', pos);
      std::string part = key.substr(pos, dot - pos);
      if (dot == std::string::npos) {
        json parsed;
        try {
          parsed = json::parse(val);
        } catch (...) {
          parsed = val;
        }
        (*node)[part] = parsed;
        break;
      }
      node = &(*node)[part];
      pos = dot + 1;
    }
  }
  return cfg;
}

json make_manifest(const std::string& command, const std::string& input, const GlobalOpts& g) {
  json m;
  m["command"] = command;
  m["input"] = input;
  m["config"] = g.config_path;
  m["overrides"] = g.sets;
  m["seed"] = g.seed;
  m["output"] = g.output;
  if (!g.no_timestamp) {
    auto now = std::chrono::system_clock::now();
    m["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
  }
  return m;
}

std::string manifest_comment(const json& manifest, const char* prefix = "# ") {
  return std::string(prefix) + "manifest: " + manifest.dump() + "\n";
}

netsens::ScheduleProgram load_input(const std::string& path) {
  std::string text = read_file(path);
  // sniff: trace files open with a `ranks` header, schedules with `num_ranks`
  std::istringstream is(text);
  std::string first;
  is >> first;
  while (first == "#") {
    std::string rest;
    std::getline(is, rest);
    is >> first;
  }
  if (first == "ranks" || first == "resolution_ns") {
    netsens::TraceFile tf = netsens::parse_trace(text);
    netsens::TraceConvertOptions opts;
    return netsens::schedule_from_trace(tf, opts);
  }
  return netsens::parse_goal(text);
}

struct Loaded {
  netsens::ScheduleProgram program;
  netsens::ModelConfig cfg;
  netsens::ExecutionGraph graph;
  std::unique_ptr<netsens::CostModel> cm;
  std::unique_ptr<netsens::Analyzer> analyzer;
};

Loaded load_all(const std::string& input, const GlobalOpts& g) {
  Loaded l;
  l.cfg = netsens::parse_model_config(load_config_json(g));
  l.program = load_input(input);
  l.graph = netsens::build_graph(l.program, l.cfg.params.S);
  if (!g.dump_dot.empty()) write_output(g.dump_dot, netsens::to_dot(l.graph));
  l.cm = std::make_unique<netsens::CostModel>(l.cfg, l.graph.num_ranks);
  l.analyzer = std::make_unique<netsens::Analyzer>(l.graph, *l.cm);
  return l;
}

// --check: the LP route must agree with the event-driven replay (and, for
// small graphs, the exact piecewise-linear envelope) to 1e-9 relative.
void cross_check(const Loaded& l) {
  auto ac = netsens::assemble_costs(l.graph, *l.cm);
  auto x = l.analyzer->values_at(0);
  double t_lp = l.analyzer->predict(0);
  auto sim = netsens::simulate(l.graph, ac, x);
  if (sim.deadlocked) throw ExitWith{3, "simulator deadlocked on a validated graph"};
  double rel = std::fabs(sim.makespan_ns - t_lp) / std::max(1.0, std::fabs(t_lp));
  if (rel > 1e-9)
    throw ExitWith{3, "oracle mismatch: simulate=" + std::to_string(sim.makespan_ns) +
                          " ns vs lp=" + std::to_string(t_lp) + " ns"};
  int lat = l.cm->latency_symbol();
  if (lat >= 0 && l.graph.vertices.size() <= 2000) {
    auto env = netsens::dp_envelope(l.graph, ac, x, lat);
    double t_dp = env.value(x[static_cast<std::size_t>(lat)]);
    rel = std::fabs(t_dp - t_lp) / std::max(1.0, std::fabs(t_lp));
    if (rel > 1e-9)
      throw ExitWith{3, "oracle mismatch: dp=" + std::to_string(t_dp) +
                            " ns vs lp=" + std::to_string(t_lp) + " ns"};
  }
}

json record_json(const netsens::AnalysisRecord& r) {
  json o;
  o["delta_l_us"] = r.delta_l_ns / 1e3;
  o["T_s"] = r.T_ns / 1e9;
  o["T_us"] = r.T_ns / 1e3;
  o["lambda_l"] = r.lambda_l;
  o["lambda_g_bytes"] = r.lambda_g_bytes;
  o["rho_l"] = r.rho_l;
  o["rho_L_paper"] = r.rho_l_paper;
  o["fl_us"] = r.fl_ns / 1e3;
  o["fu_us"] = r.fu_ns / 1e3;
  return o;
}

std::vector<double> parse_points_us(const std::string& spec) {
  // "a,b,c" list or "min:max:step" range, all in microseconds
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0)
      throw ExitWith{1, "range spec must be min:max:step, got " + spec};
    for (double v = lo; v <= hi + 1e-12; v += step) out.push_back(v);
    return out;
  }
  std::istringstream is(spec);
  std::string part;
  while (std::getline(is, part, ',')) {
    if (part.empty()) continue;
    out.push_back(std::stod(part));
  }
  return out;
}

std::vector<netsens::AnalysisRecord> run_sweep(const Loaded& l, const std::vector<double>& deltas_ns,
                                               int jobs) {
  if (jobs <= 1) return l.analyzer->sweep(deltas_ns);
  std::vector<netsens::AnalysisRecord> out(deltas_ns.size());
  std::vector<std::thread> workers;
  std::atomic<std::size_t> next{0};
  for (int w = 0; w < jobs; ++w)
    workers.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < deltas_ns.size(); i = next.fetch_add(1))
        out[i] = l.analyzer->analyze(deltas_ns[i], true);
    });
  for (auto& t : workers) t.join();
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"execution-graph runtime prediction and network-latency sensitivity analysis"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--config", g.config_path, "model configuration JSON");
  app.add_option("--set", g.sets, "override config entries, key=value (dot paths allowed)");
  app.add_option("-o,--output", g.output, "output file (default stdout)");
  app.add_option("--dump-dot", g.dump_dot, "also write the execution graph in DOT form");
  app.add_flag("--no-timestamp", g.no_timestamp, "omit the timestamp from output manifests");
  app.add_flag("--check", g.check, "cross-validate against the oracle routes (exit 3 on mismatch)");
  app.add_option("--jobs", g.jobs, "parallel workers for sweep points")->default_val(1);
  app.add_option("--seed", g.seed, "seed for randomized choices")->default_val(1);
  app.fallthrough();

  std::string input, arch_path, pi0_path, timeline_path;
  std::string delta_spec = "0", percent_spec = "1,2,5", wire_spec;
  double min_us = 0, max_us = 0, step_us = 1.0, eps_us = 1e-3;
  double threshold_us = -1;
  std::string pattern = "pipeline", collective = "recursive_doubling";
  int ranks = 2, iterations = 1;
  std::int64_t msg_size = 8;
  double calc_cost_ns = 1000;
  bool random_pi0 = false;

  auto* validate = app.add_subcommand("validate", "parse and structurally validate an input");
  validate->add_option("input", input)->required();
  auto* predict = app.add_subcommand("predict", "predicted runtime and sensitivities at the base config");
  predict->add_option("input", input)->required();
  auto* sweep = app.add_subcommand("sweep", "analysis records across added latency");
  sweep->add_option("input", input)->required();
  sweep->add_option("--delta-l", delta_spec, "added latency in us: list a,b,c or range min:max:step");
  auto* tolerance = app.add_subcommand("tolerance", "highest tolerable latency per degradation level");
  tolerance->add_option("input", input)->required();
  tolerance->add_option("--percent", percent_spec, "degradation percentages, comma list");
  tolerance->add_option("--threshold-us", threshold_us, "absolute runtime cap in us (overrides --percent)");
  auto* critlat = app.add_subcommand("critical-latencies", "latency breakpoints within an interval");
  critlat->add_option("input", input)->required();
  critlat->add_option("--min", min_us, "interval lower end, us")->required();
  critlat->add_option("--max", max_us, "interval upper end, us")->required();
  critlat->add_option("--step", step_us, "scan step, us")->default_val(1.0);
  critlat->add_option("--eps", eps_us, "breakpoint separation, us")->default_val(1e-3);
  auto* topology = app.add_subcommand("topology", "sweep over the per-wire latency of a topology config");
  topology->add_option("input", input)->required();
  topology->add_option("--wire-latency", wire_spec, "l_wire values in ns: list or min:max:step")->required();
  auto* place = app.add_subcommand("place", "rank-to-slot mapping via iterative improvement");
  place->add_option("input", input)->required();
  place->add_option("--arch", arch_path, "architecture JSON")->required();
  place->add_option("--pi0", pi0_path, "initial mapping CSV (rank,slot)");
  place->add_flag("--random-pi0", random_pi0, "random initial mapping (uses --seed)");
  auto* simulate = app.add_subcommand("simulate", "event-driven replay of the execution graph");
  simulate->add_option("input", input)->required();
  simulate->add_option("--timeline", timeline_path, "write a per-vertex timeline CSV");
  auto* exportlp = app.add_subcommand("export-lp", "emit the generated linear program as LP text");
  exportlp->add_option("input", input)->required();
  auto* gen = app.add_subcommand("gen", "generate a synthetic workload schedule");
  gen->add_option("--pattern", pattern, "halo2d | allreduce_loop | pipeline | random_dag");
  gen->add_option("--ranks", ranks)->default_val(2);
  gen->add_option("--iterations", iterations)->default_val(1);
  gen->add_option("--msg-size", msg_size, "bytes")->default_val(8);
  gen->add_option("--calc-cost", calc_cost_ns, "ns")->default_val(1000.0);
  gen->add_option("--collective", collective, "recursive_doubling | ring");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    netsens::WorkloadOptions w;
    if (pattern == "halo2d") w.pattern = netsens::WorkloadPattern::Halo2D;
    else if (pattern == "allreduce_loop") w.pattern = netsens::WorkloadPattern::AllreduceLoop;
    else if (pattern == "pipeline") w.pattern = netsens::WorkloadPattern::Pipeline;
    else if (pattern == "random_dag") w.pattern = netsens::WorkloadPattern::RandomDag;
    else throw ExitWith{1, "unknown pattern " + pattern};
    w.num_ranks = ranks;
    w.iterations = iterations;
    w.msg_size = msg_size;
    w.calc_cost = static_cast<netsens::Ticks>(calc_cost_ns);
    w.seed = g.seed;
    w.allreduce = collective == "ring" ? netsens::CollectiveAlgorithm::AllreduceRing
                                       : netsens::CollectiveAlgorithm::AllreduceRecursiveDoubling;
    auto prog = netsens::generate_workload(w);
    write_output(g.output, manifest_comment(make_manifest("gen", "", g)) +
                               netsens::serialize_goal(prog));
    return 0;
  }

  Loaded l = load_all(input, g);
  json manifest = make_manifest(app.get_subcommands().front()->get_name(), input, g);

  if (validate->parsed()) {
    auto diags = netsens::validate(l.graph);
    for (const auto& d : diags) std::cerr << d.code << ": " << d.message << "\n";
    json out;
    out["manifest"] = manifest;
    out["diagnostics"] = json::array();
    for (const auto& d : diags)
      out["diagnostics"].push_back({{"code", d.code}, {"message", d.message}});
    out["valid"] = diags.empty();
    write_output(g.output, out.dump(2) + "\n");
    return diags.empty() ? 0 : 1;
  }

  if (g.check) cross_check(l);

  if (predict->parsed()) {
    auto rec = l.analyzer->analyze(0, true);
    json out;
    out["manifest"] = manifest;
    out["record"] = record_json(rec);
    out["config_hash"] = std::hash<std::string>{}(load_config_json(g).dump());
    out["graph"] = {{"vertices", l.graph.vertices.size()}, {"edges", l.graph.edges.size()},
                    {"ranks", l.graph.num_ranks}};
    write_output(g.output, out.dump(2) + "\n");
    return 0;
  }
  if (sweep->parsed()) {
    std::vector<double> deltas_ns;
    for (double us : parse_points_us(delta_spec)) deltas_ns.push_back(us * 1e3);
    auto recs = run_sweep(l, deltas_ns, g.jobs);
    write_output(g.output, manifest_comment(manifest) + netsens::records_csv(recs));
    return 0;
  }
  if (tolerance->parsed()) {
    std::ostringstream os;
    os << manifest_comment(manifest);
    os << "percent,baseline_T_s,threshold_s,l_max_us\n";
    os.precision(12);
    auto emit = [&](const netsens::ToleranceResult& r, double pct) {
      if (!r.feasible) throw ExitWith{1, "tolerance query infeasible"};
      os << pct << ',' << r.baseline_T_ns / 1e9 << ',' << r.threshold_ns / 1e9 << ',';
      if (r.unbounded) os << "inf";
      else os << r.l_max_ns / 1e3;
      os << '\n';
    };
    if (threshold_us >= 0) {
      emit(l.analyzer->tolerance_threshold(threshold_us * 1e3), 0);
    } else {
      for (double pct : parse_points_us(percent_spec))
        emit(l.analyzer->latency_tolerance(pct), pct);
    }
    write_output(g.output, os.str());
    return 0;
  }
  if (critlat->parsed()) {
    auto res = l.analyzer->critical_latencies(min_us * 1e3, max_us * 1e3, step_us * 1e3,
                                              eps_us * 1e3);
    std::ostringstream os;
    os << manifest_comment(manifest);
    os << "# iterations: " << res.iterations << "\n";
    os << "critical_latency_us\n";
    os.precision(12);
    for (double v : res.latencies_ns) os << v / 1e3 << '\n';
    write_output(g.output, os.str());
    return 0;
  }
  if (topology->parsed()) {
    if (l.cm->mode() != netsens::CostMode::Topology)
      throw ExitWith{1, "topology sweep needs a config with a topology block"};
    double base = l.analyzer->base_latency_ns();
    std::vector<double> deltas_ns;
    for (double wire_ns : parse_points_us(wire_spec))  // ns here, same syntax
      deltas_ns.push_back(wire_ns - base);
    auto recs = run_sweep(l, deltas_ns, g.jobs);
    std::ostringstream os;
    os << manifest_comment(manifest);
    os << "l_wire_ns," << "T_s,lambda_l,lambda_g_bytes,rho_l,fl_us,fu_us\n";
    os.precision(12);
    for (const auto& r : recs)
      os << base + r.delta_l_ns << ',' << r.T_ns / 1e9 << ',' << r.lambda_l << ','
         << r.lambda_g_bytes << ',' << r.rho_l << ',' << r.fl_ns / 1e3 << ','
         << r.fu_ns / 1e3 << '\n';
    write_output(g.output, os.str());
    return 0;
  }
  if (place->parsed()) {
    auto arch = netsens::parse_architecture(json::parse(read_file(arch_path)));
    netsens::Mapping pi0(static_cast<std::size_t>(l.graph.num_ranks));
    for (std::size_t i = 0; i < pi0.size(); ++i) pi0[i] = static_cast<int>(i);
    if (!pi0_path.empty()) {
      std::istringstream is(read_file(pi0_path));
      std::string line;
      while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#' || line.rfind("rank", 0) == 0) continue;
        int r = 0, s = 0;
        if (std::sscanf(line.c_str(), "%d,%d", &r, &s) == 2 &&
            r >= 0 && r < l.graph.num_ranks)
          pi0[static_cast<std::size_t>(r)] = s;
      }
    } else if (random_pi0) {
      std::vector<int> slots(static_cast<std::size_t>(arch.num_slots()));
      for (std::size_t i = 0; i < slots.size(); ++i) slots[i] = static_cast<int>(i);
      std::mt19937 rng(g.seed);
      std::shuffle(slots.begin(), slots.end(), rng);
      for (std::size_t i = 0; i < pi0.size(); ++i) pi0[i] = slots[i];
    }
    netsens::CostModel cm0(netsens::detail::mapped_config(l.cfg, arch, pi0), l.graph.num_ranks);
    netsens::Analyzer a0(l.graph, cm0);
    double t_before = a0.predict(0);
    auto res = netsens::map_processes(l.graph, l.cfg, arch, pi0);
    std::ostringstream os;
    os << manifest_comment(manifest);
    os.precision(12);
    os << "# T_before_us: " << t_before / 1e3 << "\n";
    os << "# T_after_us: " << res.predicted_T_ns / 1e3 << "\n";
    os << "# iterations: " << res.iterations << " accepted_swaps: " << res.accepted_swaps << "\n";
    os << netsens::mapping_csv(res.pi);
    write_output(g.output, os.str());
    return 0;
  }
  if (simulate->parsed()) {
    auto ac = netsens::assemble_costs(l.graph, *l.cm);
    auto x = l.analyzer->values_at(0);
    auto sim = netsens::simulate(l.graph, ac, x);
    if (!timeline_path.empty())
      write_output(timeline_path, manifest_comment(manifest) + netsens::timeline_csv(l.graph, sim));
    json out;
    out["manifest"] = manifest;
    out["makespan_us"] = sim.makespan_ns / 1e3;
    out["deadlocked"] = sim.deadlocked;
    write_output(g.output, out.dump(2) + "\n");
    return sim.deadlocked ? 1 : 0;
  }
  if (exportlp->parsed()) {
    std::string text = netsens::export_lp(l.analyzer->lp());
    // always-on self check: the emitted text must parse back to an LP with
    // the same objective value
    netsens::LpModel reparsed = netsens::parse_lp(text);
    std::vector<double> x0;
    for (const auto& s : reparsed.symbols.syms) x0.push_back(s.lower_bound_ns);
    double t_re = netsens::lp_value(reparsed, x0);
    double t_orig = l.analyzer->predict(0);
    if (std::fabs(t_re - t_orig) > 1e-9 * std::max(1.0, std::fabs(t_orig)))
      throw ExitWith{3, "LP round-trip mismatch"};
    write_output(g.output, manifest_comment(manifest, "\\ ") + text);
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ExitWith& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const netsens::OracleError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
