#pragma once

// Schedule IR: timestamped trace records and per-rank operation lists with
// explicit label dependencies. Parsers for the line-oriented trace format
// and the GOAL-style schedule format live here.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace netsens {

using Ticks = std::int64_t;  // internal times are nanoseconds

class ParseError : public std::runtime_error {
public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class TraceOp {
  Calc,
  Send,
  Recv,
  Isend,
  Irecv,
  Wait,
  Allreduce,
  Bcast,
  Reduce,
  Barrier,
};

inline const char* to_string(TraceOp op) {
  switch (op) {
    case TraceOp::Calc: return "calc";
    case TraceOp::Send: return "send";
    case TraceOp::Recv: return "recv";
    case TraceOp::Isend: return "isend";
    case TraceOp::Irecv: return "irecv";
    case TraceOp::Wait: return "wait";
    case TraceOp::Allreduce: return "allreduce";
    case TraceOp::Bcast: return "bcast";
    case TraceOp::Reduce: return "reduce";
    case TraceOp::Barrier: return "barrier";
  }
  return "?";
}

struct TraceRecord {
  int rank = 0;
  TraceOp op = TraceOp::Send;
  Ticks t_start = 0;
  Ticks t_end = 0;
  int peer = -1;
  std::int64_t size_bytes = 0;
  int tag = 0;
  std::optional<std::int64_t> request_id;
  int comm_size = 0;
};

struct TraceFile {
  int num_ranks = 0;
  std::int64_t resolution_ns = 1;
  std::vector<std::vector<TraceRecord>> per_rank;  // sorted by t_start

  bool empty() const { return num_ranks == 0; }
};

struct ScheduleOp {
  enum class Kind { Calc, Send, Recv };

  std::string label;
  Kind kind = Kind::Calc;
  Ticks cost = 0;             // Calc only
  std::int64_t size = 0;      // Send/Recv
  int peer = -1;              // Send: dest, Recv: src
  int tag = 0;
  std::vector<std::string> deps;  // labels this op requires, same rank

  bool is_network() const { return kind != Kind::Calc; }
};

struct ScheduleProgram {
  int num_ranks = 0;
  std::vector<std::vector<ScheduleOp>> ranks;

  std::size_t total_ops() const {
    std::size_t n = 0;
    for (const auto& r : ranks) n += r.size();
    return n;
  }
};

inline bool structurally_equal(const ScheduleOp& a, const ScheduleOp& b) {
  if (a.label != b.label || a.kind != b.kind) return false;
  if (a.kind == ScheduleOp::Kind::Calc) {
    if (a.cost != b.cost) return false;
  } else {
    if (a.size != b.size || a.peer != b.peer || a.tag != b.tag) return false;
  }
  auto da = a.deps, db = b.deps;
  std::sort(da.begin(), da.end());
  std::sort(db.begin(), db.end());
  return da == db;
}

inline bool structurally_equal(const ScheduleProgram& a, const ScheduleProgram& b) {
  if (a.num_ranks != b.num_ranks || a.ranks.size() != b.ranks.size()) return false;
  for (std::size_t r = 0; r < a.ranks.size(); ++r) {
    if (a.ranks[r].size() != b.ranks[r].size()) return false;
    for (std::size_t i = 0; i < a.ranks[r].size(); ++i)
      if (!structurally_equal(a.ranks[r][i], b.ranks[r][i])) return false;
  }
  return true;
}

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream iss(line);
  std::string tok;
  while (iss >> tok) out.push_back(tok);
  return out;
}

inline std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::int64_t parse_int(const std::string& s, int line_no, const char* what) {
  try {
    std::size_t pos = 0;
    std::int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
  }
}

inline std::optional<TraceOp> trace_op_from_string(const std::string& s) {
  static const std::map<std::string, TraceOp> names = {
      {"calc", TraceOp::Calc},
      {"send", TraceOp::Send},       {"recv", TraceOp::Recv},
      {"isend", TraceOp::Isend},     {"irecv", TraceOp::Irecv},
      {"wait", TraceOp::Wait},       {"allreduce", TraceOp::Allreduce},
      {"bcast", TraceOp::Bcast},     {"reduce", TraceOp::Reduce},
      {"barrier", TraceOp::Barrier},
  };
  auto it = names.find(lower(s));
  if (it == names.end()) return std::nullopt;
  return it->second;
}

}  // namespace detail

// Trace file grammar:
//   ranks <P>
//   resolution_ns <r>
//   <rank> <op> <t_start> <t_end> [to|from <peer>] [size <bytes>] [tag <t>] [req <id>] [comm <n>]
// where <op> is calc | send | recv | isend | irecv | wait | allreduce | bcast | reduce | barrier
inline TraceFile parse_trace(const std::string& text) {
  TraceFile tf;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_ranks = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto toks = detail::tokenize(line);
    if (toks.empty()) continue;
    if (toks[0] == "ranks") {
      if (toks.size() != 2) throw ParseError("line " + std::to_string(line_no) + ": ranks header");
      tf.num_ranks = static_cast<int>(detail::parse_int(toks[1], line_no, "rank count"));
      if (tf.num_ranks < 0) throw ParseError("line " + std::to_string(line_no) + ": negative rank count");
      tf.per_rank.assign(static_cast<std::size_t>(tf.num_ranks), {});
      have_ranks = true;
      continue;
    }
    if (toks[0] == "resolution_ns") {
      if (toks.size() != 2) throw ParseError("line " + std::to_string(line_no) + ": resolution header");
      tf.resolution_ns = detail::parse_int(toks[1], line_no, "resolution");
      if (tf.resolution_ns <= 0) throw ParseError("line " + std::to_string(line_no) + ": resolution must be positive");
      continue;
    }
    if (!have_ranks)
      throw ParseError("line " + std::to_string(line_no) + ": record before 'ranks' header");
    if (toks.size() < 4) throw ParseError("line " + std::to_string(line_no) + ": malformed record");
    TraceRecord rec;
    rec.rank = static_cast<int>(detail::parse_int(toks[0], line_no, "rank"));
    auto op = detail::trace_op_from_string(toks[1]);
    if (!op) throw ParseError("line " + std::to_string(line_no) + ": unknown op '" + toks[1] + "'");
    rec.op = *op;
    rec.t_start = detail::parse_int(toks[2], line_no, "t_start");
    rec.t_end = detail::parse_int(toks[3], line_no, "t_end");
    if (rec.t_end < rec.t_start)
      throw ParseError("line " + std::to_string(line_no) + ": t_end < t_start");
    for (std::size_t i = 4; i < toks.size(); i += 2) {
      if (i + 1 >= toks.size())
        throw ParseError("line " + std::to_string(line_no) + ": dangling field '" + toks[i] + "'");
      const std::string& key = toks[i];
      const std::string& val = toks[i + 1];
      if (key == "to" || key == "from")
        rec.peer = static_cast<int>(detail::parse_int(val, line_no, "peer"));
      else if (key == "size")
        rec.size_bytes = detail::parse_int(val, line_no, "size");
      else if (key == "tag")
        rec.tag = static_cast<int>(detail::parse_int(val, line_no, "tag"));
      else if (key == "req")
        rec.request_id = detail::parse_int(val, line_no, "request id");
      else if (key == "comm")
        rec.comm_size = static_cast<int>(detail::parse_int(val, line_no, "comm size"));
      else
        throw ParseError("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
    }
    if (rec.size_bytes < 0) throw ParseError("line " + std::to_string(line_no) + ": negative size");
    if (rec.rank < 0) throw ParseError("line " + std::to_string(line_no) + ": negative rank");
    if (rec.rank >= tf.num_ranks) {
      tf.num_ranks = rec.rank + 1;  // P inferred as max rank + 1
      tf.per_rank.resize(static_cast<std::size_t>(tf.num_ranks));
    }
    bool p2p = rec.op == TraceOp::Send || rec.op == TraceOp::Recv || rec.op == TraceOp::Isend ||
               rec.op == TraceOp::Irecv;
    if (p2p && rec.peer < 0)
      throw ParseError("line " + std::to_string(line_no) + ": p2p record without peer");
    tf.per_rank[static_cast<std::size_t>(rec.rank)].push_back(rec);
  }
  for (auto& recs : tf.per_rank)
    std::stable_sort(recs.begin(), recs.end(),
                     [](const TraceRecord& a, const TraceRecord& b) { return a.t_start < b.t_start; });
  // peers must exist
  for (const auto& recs : tf.per_rank)
    for (const auto& r : recs)
      if (r.peer >= tf.num_ranks)
        throw ParseError("peer " + std::to_string(r.peer) + " out of range on rank " +
                         std::to_string(r.rank));
  return tf;
}

// GOAL-style schedule file:
//   num_ranks <P>
//   rank <i> {
//     <label>: calc <n>
//     <label>: send <n>b to <j> tag <t>
//     <label>: recv <n>b from <j> tag <t>
//     <label> requires <label>
//   }
inline ScheduleProgram parse_goal(const std::string& text) {
  ScheduleProgram prog;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  int cur_rank = -1;
  bool have_header = false;
  std::set<std::string> labels;  // current rank
  auto err = [&](const std::string& m) {
    return ParseError("line " + std::to_string(line_no) + ": " + m);
  };
  while (std::getline(in, line)) {
    ++line_no;
    auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    // Braces act as statement separators so a rank block may share a line
    // with its operations; '}' is kept as its own statement.
    std::string expanded;
    for (char c : line) {
      if (c == '{')
        expanded += " ; ";
      else if (c == '}')
        expanded += " ; } ; ";
      else
        expanded += c;
    }
    line = expanded;
    // statements may be separated by ';'
    std::string part;
    std::istringstream parts(line);
    while (std::getline(parts, part, ';')) {
      auto toks = detail::tokenize(part);
      if (toks.empty()) continue;
      if (toks[0] == "num_ranks") {
        if (toks.size() != 2) throw err("num_ranks header");
        prog.num_ranks = static_cast<int>(detail::parse_int(toks[1], line_no, "rank count"));
        if (prog.num_ranks < 0) throw err("negative num_ranks");
        prog.ranks.assign(static_cast<std::size_t>(prog.num_ranks), {});
        have_header = true;
        continue;
      }
      if (!have_header) throw err("statement before num_ranks header");
      if (toks[0] == "rank") {
        if (toks.size() < 2) throw err("rank header");
        cur_rank = static_cast<int>(detail::parse_int(toks[1], line_no, "rank index"));
        if (cur_rank < 0 || cur_rank >= prog.num_ranks)
          throw err("rank index " + std::to_string(cur_rank) + " >= declared num_ranks");
        labels.clear();
        continue;
      }
      if (toks[0] == "}") { cur_rank = -1; continue; }
      if (cur_rank < 0) throw err("statement outside rank block");
      auto& ops = prog.ranks[static_cast<std::size_t>(cur_rank)];
      if (toks.size() >= 3 && toks[1] == "requires") {
        // <label> requires <label> [<label> ...]
        ScheduleOp* target = nullptr;
        for (auto& op : ops)
          if (op.label == toks[0]) target = &op;
        if (!target) throw err("undefined label '" + toks[0] + "' in requires");
        for (std::size_t i = 2; i < toks.size(); ++i) {
          if (!labels.count(toks[i])) throw err("undefined label '" + toks[i] + "' in requires");
          target->deps.push_back(toks[i]);
        }
        continue;
      }
      // op statement: "<label>: kind ..."
      std::string label = toks[0];
      if (label.empty() || label.back() != ':') throw err("expected '<label>:'");
      label.pop_back();
      if (labels.count(label)) throw err("duplicate label '" + label + "'");
      ScheduleOp op;
      op.label = label;
      if (toks.size() < 2) throw err("missing op kind");
      const std::string& kind = toks[1];
      auto bytes_of = [&](const std::string& s) {
        if (s.size() < 2 || s.back() != 'b') throw err("expected byte count '<n>b'");
        return detail::parse_int(s.substr(0, s.size() - 1), line_no, "size");
      };
      if (kind == "calc") {
        if (toks.size() != 3) throw err("calc <n>");
        op.kind = ScheduleOp::Kind::Calc;
        op.cost = detail::parse_int(toks[2], line_no, "cost");
        if (op.cost < 0) throw err("negative calc cost");
      } else if (kind == "send" || kind == "recv") {
        // send <n>b to <j> tag <t> | recv <n>b from <j> tag <t>
        if (toks.size() != 7 || toks[3] != (kind == "send" ? "to" : "from") || toks[5] != "tag")
          throw err(kind + " <n>b " + (kind == "send" ? "to" : "from") + " <j> tag <t>");
        op.kind = kind == "send" ? ScheduleOp::Kind::Send : ScheduleOp::Kind::Recv;
        op.size = bytes_of(toks[2]);
        if (op.size < 0) throw err("negative size");
        op.peer = static_cast<int>(detail::parse_int(toks[4], line_no, "peer"));
        if (op.peer < 0 || op.peer >= prog.num_ranks) throw err("peer out of range");
        op.tag = static_cast<int>(detail::parse_int(toks[6], line_no, "tag"));
        if (op.tag < 0) throw err("negative tag");
      } else {
        throw err("unknown op kind '" + kind + "'");
      }
      labels.insert(op.label);
      ops.push_back(std::move(op));
    }
  }
  return prog;
}

inline std::string serialize_goal(const ScheduleProgram& prog) {
  std::ostringstream out;
  out << "num_ranks " << prog.num_ranks << "\n";
  for (int r = 0; r < prog.num_ranks; ++r) {
    const auto& ops = prog.ranks[static_cast<std::size_t>(r)];
    if (ops.empty()) continue;
    out << "rank " << r << " {\n";
    for (const auto& op : ops) {
      out << "  " << op.label << ": ";
      switch (op.kind) {
        case ScheduleOp::Kind::Calc:
          out << "calc " << op.cost;
          break;
        case ScheduleOp::Kind::Send:
          out << "send " << op.size << "b to " << op.peer << " tag " << op.tag;
          break;
        case ScheduleOp::Kind::Recv:
          out << "recv " << op.size << "b from " << op.peer << " tag " << op.tag;
          break;
      }
      out << "\n";
    }
    for (const auto& op : ops)
      for (const auto& dep : op.deps)
        out << "  " << op.label << " requires " << dep << "\n";
    out << "}\n";
  }
  return out.str();
}

}  // namespace netsens
