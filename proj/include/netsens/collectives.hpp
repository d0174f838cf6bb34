#pragma once

// Point-to-point expansions of collective operations. Each expansion returns
// a ScheduleProgram fragment (num_ranks = comm_size) whose dependencies
// enforce the algorithm's round structure. Internal tags are drawn from a
// reserved space (>= kCollectiveTagBase) so they never collide with user tags.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "netsens/schedule.hpp"

namespace netsens {

inline constexpr int kCollectiveTagBase = 1 << 20;

enum class CollectiveAlgorithm {
  AllreduceRecursiveDoubling,
  AllreduceRing,
  BcastBinomial,
  ReduceBinomial,
  BarrierDissemination,
};

inline const char* to_string(CollectiveAlgorithm a) {
  switch (a) {
    case CollectiveAlgorithm::AllreduceRecursiveDoubling: return "allreduce_recursive_doubling";
    case CollectiveAlgorithm::AllreduceRing: return "allreduce_ring";
    case CollectiveAlgorithm::BcastBinomial: return "bcast_binomial";
    case CollectiveAlgorithm::ReduceBinomial: return "reduce_binomial";
    case CollectiveAlgorithm::BarrierDissemination: return "barrier_dissemination";
  }
  return "?";
}

namespace detail {

class FragmentBuilder {
public:
  explicit FragmentBuilder(int comm_size) {
    frag_.num_ranks = comm_size;
    frag_.ranks.assign(static_cast<std::size_t>(comm_size), {});
  }

  // Returns the label of the new op.
  std::string add(int rank, ScheduleOp op, std::vector<std::string> deps = {}) {
    op.label = "r" + std::to_string(rank) + "_x" +
               std::to_string(frag_.ranks[static_cast<std::size_t>(rank)].size());
    op.deps = std::move(deps);
    std::string label = op.label;
    frag_.ranks[static_cast<std::size_t>(rank)].push_back(std::move(op));
    return label;
  }

  std::string send(int rank, int dest, std::int64_t size, int tag, std::vector<std::string> deps = {}) {
    ScheduleOp op;
    op.kind = ScheduleOp::Kind::Send;
    op.size = size;
    op.peer = dest;
    op.tag = tag;
    return add(rank, std::move(op), std::move(deps));
  }

  std::string recv(int rank, int src, std::int64_t size, int tag, std::vector<std::string> deps = {}) {
    ScheduleOp op;
    op.kind = ScheduleOp::Kind::Recv;
    op.size = size;
    op.peer = src;
    op.tag = tag;
    return add(rank, std::move(op), std::move(deps));
  }

  ScheduleProgram take() { return std::move(frag_); }

private:
  ScheduleProgram frag_;
};

inline int floor_log2(int x) {
  int k = 0;
  while ((1 << (k + 1)) <= x) ++k;
  return k;
}

}  // namespace detail

// Recursive-doubling allreduce. Non-power-of-two comm sizes fold the excess
// ranks into the nearest lower power of two with a pre/post exchange
// (MPICH-style reduction).
inline ScheduleProgram expand_allreduce_recursive_doubling(int comm_size, std::int64_t size_bytes,
                                                           int tag_base) {
  detail::FragmentBuilder b(comm_size);
  if (comm_size <= 1) return b.take();
  const int pow2 = 1 << detail::floor_log2(comm_size);
  const int rem = comm_size - pow2;

  // active[r] >= 0: rank participates in the doubling rounds with that index
  std::vector<int> active(static_cast<std::size_t>(comm_size), -1);
  std::vector<int> active_to_rank(static_cast<std::size_t>(pow2), 0);
  for (int r = 0; r < comm_size; ++r) {
    int nr = -1;
    if (r < 2 * rem) {
      if (r % 2 == 1) nr = r / 2;
    } else {
      nr = r - rem;
    }
    active[static_cast<std::size_t>(r)] = nr;
    if (nr >= 0) active_to_rank[static_cast<std::size_t>(nr)] = r;
  }

  std::vector<std::vector<std::string>> prev(static_cast<std::size_t>(comm_size));
  // pre-exchange: even ranks of the folded prefix hand their data to r+1
  for (int r = 0; r < 2 * rem; r += 2) {
    b.send(r, r + 1, size_bytes, tag_base);
    prev[static_cast<std::size_t>(r + 1)] = {b.recv(r + 1, r, size_bytes, tag_base)};
  }
  const int rounds = detail::floor_log2(pow2);
  for (int k = 0; k < rounds; ++k) {
    for (int nr = 0; nr < pow2; ++nr) {
      int r = active_to_rank[static_cast<std::size_t>(nr)];
      int peer = active_to_rank[static_cast<std::size_t>(nr ^ (1 << k))];
      auto deps = prev[static_cast<std::size_t>(r)];
      std::string s = b.send(r, peer, size_bytes, tag_base, deps);
      std::string v = b.recv(r, peer, size_bytes, tag_base, deps);
      prev[static_cast<std::size_t>(r)] = {s, v};
    }
  }
  // post-exchange: deliver the result back to the folded even ranks
  for (int r = 0; r < 2 * rem; r += 2) {
    b.send(r + 1, r, size_bytes, tag_base, prev[static_cast<std::size_t>(r + 1)]);
    b.recv(r, r + 1, size_bytes, tag_base, prev[static_cast<std::size_t>(r)]);
  }
  return b.take();
}

// Ring allreduce: P-1 reduce-scatter steps followed by P-1 allgather steps,
// each rank forwarding a chunk of size ceil(s/P) around the ring.
inline ScheduleProgram expand_allreduce_ring(int comm_size, std::int64_t size_bytes, int tag_base) {
  detail::FragmentBuilder b(comm_size);
  if (comm_size <= 1) return b.take();
  const std::int64_t chunk = (size_bytes + comm_size - 1) / comm_size;
  std::vector<std::string> prev_send(static_cast<std::size_t>(comm_size));
  std::vector<std::string> prev_recv(static_cast<std::size_t>(comm_size));
  for (int step = 0; step < 2 * (comm_size - 1); ++step) {
    for (int r = 0; r < comm_size; ++r) {
      int next = (r + 1) % comm_size;
      int from = (r + comm_size - 1) % comm_size;
      std::vector<std::string> sdeps;
      if (step > 0) {
        // the chunk forwarded in this step arrived in the previous one
        sdeps = {prev_recv[static_cast<std::size_t>(r)], prev_send[static_cast<std::size_t>(r)]};
      }
      std::vector<std::string> rdeps;
      if (step > 0) rdeps = {prev_recv[static_cast<std::size_t>(r)]};
      prev_send[static_cast<std::size_t>(r)] = b.send(r, next, chunk, tag_base, sdeps);
      prev_recv[static_cast<std::size_t>(r)] = b.recv(r, from, chunk, tag_base, rdeps);
    }
  }
  return b.take();
}

// Binomial-tree broadcast rooted at rank 0.
inline ScheduleProgram expand_bcast_binomial(int comm_size, std::int64_t size_bytes, int tag_base) {
  detail::FragmentBuilder b(comm_size);
  if (comm_size <= 1) return b.take();
  for (int r = 0; r < comm_size; ++r) {
    std::vector<std::string> chain;
    int lowest = r == 0 ? (1 << 30) : (r & -r);
    if (r != 0) {
      int parent = r - lowest;
      chain = {b.recv(r, parent, size_bytes, tag_base)};
    }
    // children: larger subtrees first
    std::vector<int> children;
    for (int bit = 1; bit < comm_size; bit <<= 1)
      if (bit < lowest && r + bit < comm_size) children.push_back(r + bit);
    for (auto it = children.rbegin(); it != children.rend(); ++it)
      chain = {b.send(r, *it, size_bytes, tag_base, chain)};
  }
  return b.take();
}

// Binomial-tree reduce to rank 0 (mirror of the broadcast tree).
inline ScheduleProgram expand_reduce_binomial(int comm_size, std::int64_t size_bytes, int tag_base) {
  detail::FragmentBuilder b(comm_size);
  if (comm_size <= 1) return b.take();
  for (int r = 0; r < comm_size; ++r) {
    int lowest = r == 0 ? (1 << 30) : (r & -r);
    std::vector<int> children;
    for (int bit = 1; bit < comm_size; bit <<= 1)
      if (bit < lowest && r + bit < comm_size) children.push_back(r + bit);
    std::vector<std::string> chain;
    for (int c : children) chain = {b.recv(r, c, size_bytes, tag_base, chain)};
    if (r != 0) b.send(r, r - lowest, size_bytes, tag_base, chain);
  }
  return b.take();
}

// Dissemination barrier; messages carry a single byte.
inline ScheduleProgram expand_barrier_dissemination(int comm_size, int tag_base) {
  detail::FragmentBuilder b(comm_size);
  if (comm_size <= 1) return b.take();
  int rounds = 0;
  while ((1 << rounds) < comm_size) ++rounds;
  std::vector<std::vector<std::string>> prev(static_cast<std::size_t>(comm_size));
  for (int k = 0; k < rounds; ++k) {
    for (int r = 0; r < comm_size; ++r) {
      int to = (r + (1 << k)) % comm_size;
      int from = (r + comm_size - (1 << k)) % comm_size;
      auto deps = prev[static_cast<std::size_t>(r)];
      std::string s = b.send(r, to, 1, tag_base, deps);
      std::string v = b.recv(r, from, 1, tag_base, deps);
      prev[static_cast<std::size_t>(r)] = {s, v};
    }
  }
  return b.take();
}

inline ScheduleProgram expand_collective(CollectiveAlgorithm alg, int comm_size,
                                         std::int64_t size_bytes, int tag_base) {
  if (comm_size < 1) throw ParseError("expand_collective: comm_size must be >= 1");
  switch (alg) {
    case CollectiveAlgorithm::AllreduceRecursiveDoubling:
      return expand_allreduce_recursive_doubling(comm_size, size_bytes, tag_base);
    case CollectiveAlgorithm::AllreduceRing:
      return expand_allreduce_ring(comm_size, size_bytes, tag_base);
    case CollectiveAlgorithm::BcastBinomial:
      return expand_bcast_binomial(comm_size, size_bytes, tag_base);
    case CollectiveAlgorithm::ReduceBinomial:
      return expand_reduce_binomial(comm_size, size_bytes, tag_base);
    case CollectiveAlgorithm::BarrierDissemination:
      return expand_barrier_dissemination(comm_size, tag_base);
  }
  throw ParseError("expand_collective: unknown algorithm");
}

// Splices a fragment's per-rank ops into `program`. Fragment roots gain a
// dependency on each rank's current tail; the returned labels are the new
// per-rank tails (fragment sinks, or the old tail where the fragment has no
// ops for that rank).
inline std::vector<std::vector<std::string>> splice_fragment(
    ScheduleProgram& program, const ScheduleProgram& fragment, const std::string& prefix,
    const std::vector<std::vector<std::string>>& tails) {
  std::vector<std::vector<std::string>> new_tails = tails;
  for (int r = 0; r < fragment.num_ranks; ++r) {
    const auto& ops = fragment.ranks[static_cast<std::size_t>(r)];
    if (ops.empty()) continue;
    std::set<std::string> has_successor;
    for (const auto& op : ops)
      for (const auto& d : op.deps) has_successor.insert(d);
    auto& out = program.ranks[static_cast<std::size_t>(r)];
    std::vector<std::string> sinks;
    for (const auto& op : ops) {
      ScheduleOp copy = op;
      copy.label = prefix + op.label;
      for (auto& d : copy.deps) d = prefix + d;
      if (op.deps.empty())
        for (const auto& t : tails[static_cast<std::size_t>(r)]) copy.deps.push_back(t);
      if (!has_successor.count(op.label)) sinks.push_back(copy.label);
      out.push_back(std::move(copy));
    }
    if (!sinks.empty()) new_tails[static_cast<std::size_t>(r)] = sinks;
  }
  return new_tails;
}

}  // namespace netsens
