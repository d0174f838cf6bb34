#pragma once

// Trace-to-schedule conversion and synthetic workload generation.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "netsens/collectives.hpp"
#include "netsens/schedule.hpp"

namespace netsens {

struct CollectiveChoices {
  CollectiveAlgorithm allreduce = CollectiveAlgorithm::AllreduceRecursiveDoubling;
  CollectiveAlgorithm bcast = CollectiveAlgorithm::BcastBinomial;
  CollectiveAlgorithm reduce = CollectiveAlgorithm::ReduceBinomial;
  CollectiveAlgorithm barrier = CollectiveAlgorithm::BarrierDissemination;
};

struct TraceConvertOptions {
  CollectiveChoices collectives;
  // Negative inter-op gaps (clock skew) clamp to zero; warnings are collected here.
  std::vector<std::string>* warnings = nullptr;
};

namespace detail {

struct PendingRequest {
  std::string label;  // label of the emitted network op
};

}  // namespace detail

// Converts a timestamped trace into a ScheduleProgram. Gaps between
// consecutive operations on a rank become Calc ops (clamped at zero and
// suppressed when zero). Nonblocking operations emit their network op at the
// call site; downstream ops pick up the completion dependency at the
// matching Wait. Collectives are expanded into p2p algorithms.
inline ScheduleProgram schedule_from_trace(const TraceFile& tf, TraceConvertOptions opts = {}) {
  ScheduleProgram prog;
  prog.num_ranks = tf.num_ranks;
  prog.ranks.assign(static_cast<std::size_t>(tf.num_ranks), {});
  if (tf.num_ranks == 0) return prog;

  Ticks t0 = std::numeric_limits<Ticks>::max();
  for (const auto& recs : tf.per_rank)
    for (const auto& r : recs) t0 = std::min(t0, r.t_start);
  if (t0 == std::numeric_limits<Ticks>::max()) t0 = 0;

  struct RankState {
    std::vector<std::string> tails;  // labels the next op depends on
    Ticks prev_end;
    std::map<std::int64_t, detail::PendingRequest> pending;  // request id -> op
    int op_counter = 0;
    int coll_counter = 0;
  };
  std::vector<RankState> st(static_cast<std::size_t>(tf.num_ranks));
  for (auto& s : st) s.prev_end = t0;

  // Collective instances are matched by per-rank occurrence order (SPMD
  // assumption); fragments are generated lazily from the first rank that
  // reaches a given instance.
  struct CollInstance {
    TraceOp op;
    std::int64_t size;
    ScheduleProgram fragment;
  };
  std::vector<CollInstance> instances;

  auto add_op = [&](int rank, ScheduleOp op, std::vector<std::string> deps) {
    auto& s = st[static_cast<std::size_t>(rank)];
    op.label = "r" + std::to_string(rank) + "_" + std::to_string(s.op_counter++);
    op.deps = std::move(deps);
    std::string label = op.label;
    prog.ranks[static_cast<std::size_t>(rank)].push_back(std::move(op));
    return label;
  };

  auto emit_gap = [&](int rank, const TraceRecord& rec) {
    auto& s = st[static_cast<std::size_t>(rank)];
    Ticks gap = (rec.t_start - s.prev_end) * tf.resolution_ns;
    if (gap < 0) {
      if (opts.warnings)
        opts.warnings->push_back("rank " + std::to_string(rank) +
                                 ": negative gap clamped to 0 before t=" +
                                 std::to_string(rec.t_start));
      gap = 0;
    }
    if (gap > 0) {
      ScheduleOp calc;
      calc.kind = ScheduleOp::Kind::Calc;
      calc.cost = gap;
      s.tails = {add_op(rank, std::move(calc), s.tails)};
    }
  };

  for (int rank = 0; rank < tf.num_ranks; ++rank) {
    auto& s = st[static_cast<std::size_t>(rank)];
    for (const auto& rec : tf.per_rank[static_cast<std::size_t>(rank)]) {
      emit_gap(rank, rec);
      switch (rec.op) {
        case TraceOp::Calc: {
          Ticks span = (rec.t_end - rec.t_start) * tf.resolution_ns;
          if (span > 0) {
            ScheduleOp op;
            op.kind = ScheduleOp::Kind::Calc;
            op.cost = span;
            s.tails = {add_op(rank, std::move(op), s.tails)};
          }
          break;
        }
        case TraceOp::Send:
        case TraceOp::Recv: {
          ScheduleOp op;
          op.kind = rec.op == TraceOp::Send ? ScheduleOp::Kind::Send : ScheduleOp::Kind::Recv;
          op.size = rec.size_bytes;
          op.peer = rec.peer;
          op.tag = rec.tag;
          s.tails = {add_op(rank, std::move(op), s.tails)};
          break;
        }
        case TraceOp::Isend:
        case TraceOp::Irecv: {
          ScheduleOp op;
          op.kind = rec.op == TraceOp::Isend ? ScheduleOp::Kind::Send : ScheduleOp::Kind::Recv;
          op.size = rec.size_bytes;
          op.peer = rec.peer;
          op.tag = rec.tag;
          // out of the local chain: requires the preceding op but nothing
          // requires it until the matching Wait
          std::string label = add_op(rank, std::move(op), s.tails);
          if (!rec.request_id)
            throw ParseError("rank " + std::to_string(rank) + ": nonblocking op without req id");
          s.pending[*rec.request_id] = {label};
          break;
        }
        case TraceOp::Wait: {
          if (!rec.request_id)
            throw ParseError("rank " + std::to_string(rank) + ": wait without req id");
          auto it = s.pending.find(*rec.request_id);
          if (it == s.pending.end())
            throw ParseError("rank " + std::to_string(rank) + ": wait for unknown request " +
                             std::to_string(*rec.request_id));
          s.tails.push_back(it->second.label);
          s.pending.erase(it);
          break;
        }
        case TraceOp::Allreduce:
        case TraceOp::Bcast:
        case TraceOp::Reduce:
        case TraceOp::Barrier: {
          int inst = s.coll_counter++;
          if (inst >= static_cast<int>(instances.size())) {
            CollInstance ci;
            ci.op = rec.op;
            ci.size = rec.size_bytes;
            CollectiveAlgorithm alg = opts.collectives.allreduce;
            if (rec.op == TraceOp::Bcast) alg = opts.collectives.bcast;
            if (rec.op == TraceOp::Reduce) alg = opts.collectives.reduce;
            if (rec.op == TraceOp::Barrier) alg = opts.collectives.barrier;
            int cs = rec.comm_size > 0 ? rec.comm_size : tf.num_ranks;
            if (cs != tf.num_ranks)
              throw ParseError("sub-communicator collectives are not supported");
            ci.fragment = expand_collective(alg, cs, rec.size_bytes,
                                            kCollectiveTagBase + inst);
            instances.push_back(std::move(ci));
          } else if (instances[static_cast<std::size_t>(inst)].op != rec.op) {
            throw ParseError("rank " + std::to_string(rank) +
                             ": collective sequence mismatch at instance " + std::to_string(inst));
          }
          const auto& frag = instances[static_cast<std::size_t>(inst)].fragment;
          const auto& ops = frag.ranks[static_cast<std::size_t>(rank)];
          std::set<std::string> has_successor;
          for (const auto& op : ops)
            for (const auto& d : op.deps) has_successor.insert(d);
          std::map<std::string, std::string> rename;
          std::vector<std::string> sinks;
          for (const auto& op : ops) {
            ScheduleOp copy = op;
            copy.label.clear();
            std::vector<std::string> deps;
            for (const auto& d : op.deps) deps.push_back(rename.at(d));
            if (op.deps.empty()) deps = s.tails;
            std::string label = add_op(rank, std::move(copy), std::move(deps));
            rename[op.label] = label;
            if (!has_successor.count(op.label)) sinks.push_back(label);
          }
          if (!sinks.empty()) s.tails = sinks;
          break;
        }
      }
      s.prev_end = rec.t_end;
    }
    if (!s.pending.empty())
      throw ParseError("rank " + std::to_string(rank) + ": " + std::to_string(s.pending.size()) +
                       " unmatched nonblocking request(s) at end of trace");
  }
  return prog;
}

enum class WorkloadPattern { Halo2D, AllreduceLoop, Pipeline, RandomDag };

struct WorkloadOptions {
  WorkloadPattern pattern = WorkloadPattern::Pipeline;
  int num_ranks = 2;
  int iterations = 1;
  std::int64_t msg_size = 4;
  Ticks calc_cost = 1000;
  std::uint64_t seed = 1;
  CollectiveAlgorithm allreduce = CollectiveAlgorithm::AllreduceRecursiveDoubling;
};

namespace detail {

inline std::pair<int, int> halo_grid(int p) {
  for (int a = static_cast<int>(std::sqrt(static_cast<double>(p))); a >= 2; --a)
    if (p % a == 0) return {a, p / a};
  throw ParseError("halo2d needs P expressible as a x b with a, b >= 2 (got P=" +
                   std::to_string(p) + ")");
}

}  // namespace detail

inline ScheduleProgram generate_workload(const WorkloadOptions& w) {
  if (w.num_ranks < 1) throw ParseError("generate_workload: P must be >= 1");
  if (w.iterations < 0) throw ParseError("generate_workload: negative iterations");
  ScheduleProgram prog;
  prog.num_ranks = w.num_ranks;
  prog.ranks.assign(static_cast<std::size_t>(w.num_ranks), {});
  std::vector<int> counter(static_cast<std::size_t>(w.num_ranks), 0);
  auto add = [&](int rank, ScheduleOp op, std::vector<std::string> deps) {
    op.label = "r" + std::to_string(rank) + "_" +
               std::to_string(counter[static_cast<std::size_t>(rank)]++);
    op.deps = std::move(deps);
    std::string label = op.label;
    prog.ranks[static_cast<std::size_t>(rank)].push_back(std::move(op));
    return label;
  };
  auto calc = [&](int rank, Ticks cost, std::vector<std::string> deps) {
    ScheduleOp op;
    op.kind = ScheduleOp::Kind::Calc;
    op.cost = cost;
    return add(rank, std::move(op), std::move(deps));
  };
  auto send = [&](int rank, int to, std::int64_t size, int tag, std::vector<std::string> deps) {
    ScheduleOp op;
    op.kind = ScheduleOp::Kind::Send;
    op.size = size;
    op.peer = to;
    op.tag = tag;
    return add(rank, std::move(op), std::move(deps));
  };
  auto recv = [&](int rank, int from, std::int64_t size, int tag, std::vector<std::string> deps) {
    ScheduleOp op;
    op.kind = ScheduleOp::Kind::Recv;
    op.size = size;
    op.peer = from;
    op.tag = tag;
    return add(rank, std::move(op), std::move(deps));
  };

  switch (w.pattern) {
    case WorkloadPattern::Pipeline: {
      std::vector<std::vector<std::string>> tails(static_cast<std::size_t>(w.num_ranks));
      for (int it = 0; it < w.iterations; ++it) {
        for (int r = 0; r < w.num_ranks; ++r) {
          auto& tail = tails[static_cast<std::size_t>(r)];
          tail = {calc(r, w.calc_cost, tail)};
          if (r > 0) tail = {recv(r, r - 1, w.msg_size, it, tail)};
          if (r < w.num_ranks - 1) tail = {send(r, r + 1, w.msg_size, it, tail)};
          tail = {calc(r, w.calc_cost, tail)};
        }
      }
      break;
    }
    case WorkloadPattern::AllreduceLoop: {
      std::vector<std::vector<std::string>> tails(static_cast<std::size_t>(w.num_ranks));
      for (int it = 0; it < w.iterations; ++it) {
        for (int r = 0; r < w.num_ranks; ++r)
          tails[static_cast<std::size_t>(r)] = {
              calc(r, w.calc_cost, tails[static_cast<std::size_t>(r)])};
        auto frag = expand_collective(w.allreduce, w.num_ranks, w.msg_size,
                                      kCollectiveTagBase + it);
        tails = splice_fragment(prog, frag, "c" + std::to_string(it) + "_", tails);
        // splice_fragment appends with fragment labels; recount for add()
        for (int r = 0; r < w.num_ranks; ++r)
          counter[static_cast<std::size_t>(r)] =
              static_cast<int>(prog.ranks[static_cast<std::size_t>(r)].size());
      }
      break;
    }
    case WorkloadPattern::Halo2D: {
      auto [a, bdim] = detail::halo_grid(w.num_ranks);
      auto coord = [&](int r) { return std::pair<int, int>{r % a, r / a}; };
      auto rank_of = [&](int x, int y) { return ((x + a) % a) + ((y + bdim) % bdim) * a; };
      std::vector<std::vector<std::string>> tails(static_cast<std::size_t>(w.num_ranks));
      for (int it = 0; it < w.iterations; ++it) {
        for (int r = 0; r < w.num_ranks; ++r) {
          auto& tail = tails[static_cast<std::size_t>(r)];
          tail = {calc(r, w.calc_cost, tail)};
          auto [x, y] = coord(r);
          int nbrs[4] = {rank_of(x - 1, y), rank_of(x + 1, y), rank_of(x, y - 1),
                         rank_of(x, y + 1)};
          std::vector<std::string> done;
          for (int d = 0; d < 4; ++d) {
            if (nbrs[d] == r) continue;  // degenerate grid dimension
            done.push_back(send(r, nbrs[d], w.msg_size, it * 8 + d, tail));
          }
          // receive in the mirrored direction order so sends/recvs pair up
          static const int mirror[4] = {1, 0, 3, 2};
          for (int d = 0; d < 4; ++d) {
            if (nbrs[d] == r) continue;
            done.push_back(recv(r, nbrs[d], w.msg_size, it * 8 + mirror[d], tail));
          }
          tail = done;
        }
      }
      break;
    }
    case WorkloadPattern::RandomDag: {
      std::mt19937_64 rng(w.seed);
      std::vector<std::vector<std::string>> tails(static_cast<std::size_t>(w.num_ranks));
      int events = std::max(1, w.iterations) * std::max(1, w.num_ranks) * 4;
      std::uniform_int_distribution<int> rank_dist(0, w.num_ranks - 1);
      std::uniform_int_distribution<int> kind_dist(0, 2);
      std::uniform_int_distribution<Ticks> cost_dist(0, std::max<Ticks>(1, w.calc_cost * 2));
      std::uniform_int_distribution<std::int64_t> size_dist(1, std::max<std::int64_t>(1, w.msg_size * 2));
      for (int e = 0; e < events; ++e) {
        int kind = kind_dist(rng);
        if (kind == 0 || w.num_ranks < 2) {
          int r = rank_dist(rng);
          auto& tail = tails[static_cast<std::size_t>(r)];
          tail = {calc(r, cost_dist(rng), tail)};
        } else {
          int src = rank_dist(rng);
          int dst = rank_dist(rng);
          if (src == dst) dst = (dst + 1) % w.num_ranks;
          std::int64_t size = size_dist(rng);
          // both sides appended in the same global event order keeps the
          // graph acyclic even under rendezvous virtual edges
          auto& stail = tails[static_cast<std::size_t>(src)];
          stail = {send(src, dst, size, e & 3, stail)};
          auto& rtail = tails[static_cast<std::size_t>(dst)];
          rtail = {recv(dst, src, size, e & 3, rtail)};
        }
      }
      break;
    }
  }
  return prog;
}

}  // namespace netsens
