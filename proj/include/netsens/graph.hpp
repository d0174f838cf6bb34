#pragma once

// Execution DAG built from a ScheduleProgram: calc/send/recv vertices with
// local, communication, and virtual (rendezvous) edges.

#include <cstdint>
#include <deque>
#include <tuple>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "netsens/schedule.hpp"

namespace netsens {

class GraphError : public std::runtime_error {
public:
  explicit GraphError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class VertexKind { Calc, Send, Recv };

inline const char* to_string(VertexKind k) {
  switch (k) {
    case VertexKind::Calc: return "calc";
    case VertexKind::Send: return "send";
    case VertexKind::Recv: return "recv";
  }
  return "?";
}

struct Vertex {
  int id = 0;
  int rank = 0;
  int pos = 0;  // program position within the rank
  VertexKind kind = VertexKind::Calc;
  Ticks cost = 0;             // Calc
  std::int64_t size = 0;      // Send/Recv
  int peer = -1;
  int tag = 0;
  bool rendezvous = false;    // Send/Recv of a message with size >= S
};

enum class EdgeKind { Local, Comm, Virtual };

struct Edge {
  int src = 0;
  int dst = 0;
  EdgeKind kind = EdgeKind::Local;
  std::int64_t size = 0;      // Comm only
  bool rendezvous = false;    // Comm only
  bool adjacent_injection = false;  // Local edge between program-adjacent network ops
};

struct ExecutionGraph {
  int num_ranks = 0;
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;
  std::vector<std::vector<int>> in_edges;   // edge indices by dst vertex
  std::vector<std::vector<int>> out_edges;  // edge indices by src vertex
  std::vector<int> topo_order;

  const Vertex& vertex(int id) const { return vertices[static_cast<std::size_t>(id)]; }
  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_edges() const { return edges.size(); }
};

struct Diagnostic {
  std::string code;
  std::string message;
  std::vector<int> vertex_ids;
};

namespace detail {

// Kahn's algorithm with ties broken by vertex id; ids are dense in
// (rank, program position) order so the result is deterministic.
inline std::vector<int> kahn_order(const ExecutionGraph& g) {
  std::vector<int> indeg(g.vertices.size(), 0);
  for (const auto& e : g.edges) ++indeg[static_cast<std::size_t>(e.dst)];
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (std::size_t v = 0; v < g.vertices.size(); ++v)
    if (indeg[v] == 0) ready.push(static_cast<int>(v));
  std::vector<int> order;
  order.reserve(g.vertices.size());
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int ei : g.out_edges[static_cast<std::size_t>(v)]) {
      int w = g.edges[static_cast<std::size_t>(ei)].dst;
      if (--indeg[static_cast<std::size_t>(w)] == 0) ready.push(w);
    }
  }
  if (order.size() != g.vertices.size()) {
    std::ostringstream msg;
    msg << "cycle detected; unresolved vertices:";
    for (std::size_t v = 0; v < g.vertices.size(); ++v)
      if (indeg[v] > 0) msg << " " << v;
    throw GraphError(msg.str());
  }
  return order;
}

}  // namespace detail

// Builds the execution DAG. Sends and recvs are matched by (source,
// destination, tag) in per-pair FIFO order. Messages with size >=
// eager_threshold are flagged rendezvous: a Virtual edge runs from each
// local predecessor of the Recv (the receiver's readiness point) to the
// matched Send.
inline ExecutionGraph build_graph(const ScheduleProgram& prog, std::int64_t eager_threshold) {
  ExecutionGraph g;
  g.num_ranks = prog.num_ranks;
  std::vector<std::map<std::string, int>> label_to_id(static_cast<std::size_t>(prog.num_ranks));
  for (int r = 0; r < prog.num_ranks; ++r) {
    const auto& ops = prog.ranks[static_cast<std::size_t>(r)];
    for (int pos = 0; pos < static_cast<int>(ops.size()); ++pos) {
      const auto& op = ops[static_cast<std::size_t>(pos)];
      Vertex v;
      v.id = static_cast<int>(g.vertices.size());
      v.rank = r;
      v.pos = pos;
      switch (op.kind) {
        case ScheduleOp::Kind::Calc:
          v.kind = VertexKind::Calc;
          v.cost = op.cost;
          break;
        case ScheduleOp::Kind::Send:
          v.kind = VertexKind::Send;
          v.size = op.size;
          v.peer = op.peer;
          v.tag = op.tag;
          break;
        case ScheduleOp::Kind::Recv:
          v.kind = VertexKind::Recv;
          v.size = op.size;
          v.peer = op.peer;
          v.tag = op.tag;
          break;
      }
      auto [it, inserted] = label_to_id[static_cast<std::size_t>(r)].emplace(op.label, v.id);
      if (!inserted)
        throw GraphError("rank " + std::to_string(r) + ": duplicate label '" + op.label + "'");
      g.vertices.push_back(v);
    }
  }
  // local dependency edges
  for (int r = 0; r < prog.num_ranks; ++r) {
    const auto& ops = prog.ranks[static_cast<std::size_t>(r)];
    const auto& ids = label_to_id[static_cast<std::size_t>(r)];
    for (const auto& op : ops) {
      int dst = ids.at(op.label);
      for (const auto& dep : op.deps) {
        auto it = ids.find(dep);
        if (it == ids.end())
          throw GraphError("rank " + std::to_string(r) + ": op '" + op.label +
                           "' requires unknown label '" + dep + "'");
        Edge e;
        e.src = it->second;
        e.dst = dst;
        e.kind = EdgeKind::Local;
        const auto& sv = g.vertices[static_cast<std::size_t>(e.src)];
        const auto& dv = g.vertices[static_cast<std::size_t>(e.dst)];
        if (sv.kind != VertexKind::Calc && dv.kind != VertexKind::Calc &&
            dv.pos == sv.pos + 1)
          e.adjacent_injection = true;
        g.edges.push_back(e);
      }
    }
  }
  // comm matching: FIFO queues keyed by (src, dst, tag)
  std::map<std::tuple<int, int, int>, std::deque<int>> send_q, recv_q;
  std::vector<std::pair<int, int>> matches;  // (send id, recv id)
  for (const auto& v : g.vertices) {
    if (v.kind == VertexKind::Send) {
      auto key = std::make_tuple(v.rank, v.peer, v.tag);
      auto& rq = recv_q[key];
      if (!rq.empty()) {
        matches.emplace_back(v.id, rq.front());
        rq.pop_front();
      } else {
        send_q[key].push_back(v.id);
      }
    } else if (v.kind == VertexKind::Recv) {
      auto key = std::make_tuple(v.peer, v.rank, v.tag);
      auto& sq = send_q[key];
      if (!sq.empty()) {
        matches.emplace_back(sq.front(), v.id);
        sq.pop_front();
      } else {
        recv_q[key].push_back(v.id);
      }
    }
  }
  {
    std::ostringstream orphans;
    int n_orphans = 0;
    auto report = [&](const std::map<std::tuple<int, int, int>, std::deque<int>>& q,
                      const char* what) {
      for (const auto& [key, dq] : q)
        for (int id : dq) {
          const auto& v = g.vertices[static_cast<std::size_t>(id)];
          orphans << " [" << what << " rank=" << v.rank << " peer=" << v.peer
                  << " tag=" << v.tag << " pos=" << v.pos << "]";
          ++n_orphans;
        }
    };
    report(send_q, "send");
    report(recv_q, "recv");
    if (n_orphans > 0)
      throw GraphError("unmatched operations:" + orphans.str());
  }
  std::sort(matches.begin(), matches.end());
  std::vector<std::vector<int>> local_preds(g.vertices.size());
  for (std::size_t ei = 0; ei < g.edges.size(); ++ei)
    local_preds[static_cast<std::size_t>(g.edges[ei].dst)].push_back(g.edges[ei].src);
  for (auto [sid, rid] : matches) {
    auto& sv = g.vertices[static_cast<std::size_t>(sid)];
    auto& rv = g.vertices[static_cast<std::size_t>(rid)];
    if (sv.size != rv.size)
      throw GraphError("size mismatch on message rank " + std::to_string(sv.rank) + " -> rank " +
                       std::to_string(rv.rank) + " tag " + std::to_string(sv.tag) + ": " +
                       std::to_string(sv.size) + " vs " + std::to_string(rv.size));
    Edge e;
    e.src = sid;
    e.dst = rid;
    e.kind = EdgeKind::Comm;
    e.size = sv.size;
    if (sv.size >= eager_threshold) {
      e.rendezvous = true;
      sv.rendezvous = true;
      rv.rendezvous = true;
      for (int p : local_preds[static_cast<std::size_t>(rid)]) {
        Edge ve;
        ve.src = p;
        ve.dst = sid;
        ve.kind = EdgeKind::Virtual;
        g.edges.push_back(ve);
      }
    }
    g.edges.push_back(e);
  }
  g.in_edges.assign(g.vertices.size(), {});
  g.out_edges.assign(g.vertices.size(), {});
  for (std::size_t ei = 0; ei < g.edges.size(); ++ei) {
    g.out_edges[static_cast<std::size_t>(g.edges[ei].src)].push_back(static_cast<int>(ei));
    g.in_edges[static_cast<std::size_t>(g.edges[ei].dst)].push_back(static_cast<int>(ei));
  }
  g.topo_order = detail::kahn_order(g);
  return g;
}

inline std::vector<int> topological_order(const ExecutionGraph& g) {
  return detail::kahn_order(g);
}

// Structural invariant checks; diagnostics are data, not errors.
inline std::vector<Diagnostic> validate(const ExecutionGraph& g) {
  std::vector<Diagnostic> out;
  std::vector<int> comm_count(g.vertices.size(), 0);
  for (const auto& e : g.edges) {
    const auto& sv = g.vertices[static_cast<std::size_t>(e.src)];
    const auto& dv = g.vertices[static_cast<std::size_t>(e.dst)];
    switch (e.kind) {
      case EdgeKind::Comm:
        ++comm_count[static_cast<std::size_t>(e.src)];
        ++comm_count[static_cast<std::size_t>(e.dst)];
        if (sv.kind != VertexKind::Send || dv.kind != VertexKind::Recv)
          out.push_back({"comm-endpoints", "comm edge must run send -> recv", {e.src, e.dst}});
        if (sv.rank == dv.rank)
          out.push_back({"comm-same-rank", "comm edge within a single rank", {e.src, e.dst}});
        if (sv.size != dv.size)
          out.push_back({"size-mismatch",
                         "comm edge endpoint sizes differ (" + std::to_string(sv.size) + " vs " +
                             std::to_string(dv.size) + ")",
                         {e.src, e.dst}});
        if (sv.tag != dv.tag)
          out.push_back({"tag-mismatch", "comm edge endpoint tags differ", {e.src, e.dst}});
        break;
      case EdgeKind::Local:
        if (sv.rank != dv.rank)
          out.push_back({"local-cross-rank", "local edge across ranks", {e.src, e.dst}});
        break;
      case EdgeKind::Virtual:
        if (!dv.rendezvous)
          out.push_back({"virtual-non-rendezvous",
                         "virtual edge into a non-rendezvous vertex", {e.src, e.dst}});
        break;
    }
  }
  for (const auto& v : g.vertices) {
    if (v.kind == VertexKind::Calc) continue;
    if (comm_count[static_cast<std::size_t>(v.id)] != 1)
      out.push_back({"comm-degree",
                     std::string(to_string(v.kind)) + " participates in " +
                         std::to_string(comm_count[static_cast<std::size_t>(v.id)]) +
                         " comm edges (expected 1)",
                     {v.id}});
  }
  // cycle check (2-cycles and larger) without throwing
  try {
    detail::kahn_order(g);
  } catch (const GraphError& e) {
    out.push_back({"cycle", e.what(), {}});
  }
  return out;
}

inline std::string to_dot(const ExecutionGraph& g) {
  std::ostringstream out;
  out << "digraph execution {\n  rankdir=LR;\n";
  for (const auto& v : g.vertices) {
    out << "  v" << v.id << " [label=\"" << v.rank << ":" << to_string(v.kind) << ":"
        << (v.kind == VertexKind::Calc ? v.cost : v.size) << "\"";
    if (v.kind != VertexKind::Calc) out << " shape=box";
    out << "];\n";
  }
  for (const auto& e : g.edges) {
    out << "  v" << e.src << " -> v" << e.dst;
    if (e.kind == EdgeKind::Comm) out << " [color=red]";
    if (e.kind == EdgeKind::Virtual) out << " [style=dashed]";
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace netsens
