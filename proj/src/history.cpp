#include "cobst/history.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace cobst {

const char* to_string(OpKind op) noexcept {
  switch (op) {
    case OpKind::Insert:
      return "INSERT";
    case OpKind::Delete:
      return "DELETE";
    case OpKind::Contains:
      return "CONTAINS";
  }
  return "?";
}

std::optional<OpKind> parse_op_kind(std::string_view text) {
  if (text == "INSERT") return OpKind::Insert;
  if (text == "DELETE") return OpKind::Delete;
  if (text == "CONTAINS") return OpKind::Contains;
  return std::nullopt;
}

void check_well_formed(const History& h) {
  struct Open {
    OpKind op;
    Key key;
  };
  std::map<ThreadId, std::optional<Open>> open;
  std::uint64_t last_seq = 0;
  bool first = true;
  for (const auto& e : h.events) {
    if (!first && e.seq <= last_seq)
      throw HistoryError("sequence numbers not strictly increasing at seq " +
                         std::to_string(e.seq));
    first = false;
    last_seq = e.seq;
    auto& slot = open[e.thread];
    if (e.kind == EventKind::Invoke) {
      if (slot)
        throw HistoryError("thread " + std::to_string(e.thread) +
                           " invokes at seq " + std::to_string(e.seq) +
                           " before its previous operation responded");
      if (e.ret)
        throw HistoryError("invocation at seq " + std::to_string(e.seq) +
                           " carries a return value");
      slot = Open{e.op, e.key};
    } else {
      if (!slot)
        throw HistoryError("thread " + std::to_string(e.thread) +
                           " responds at seq " + std::to_string(e.seq) +
                           " without a pending invocation");
      if (slot->op != e.op || slot->key != e.key)
        throw HistoryError("response at seq " + std::to_string(e.seq) +
                           " does not match its invocation");
      if (!e.ret)
        throw HistoryError("response at seq " + std::to_string(e.seq) +
                           " has no return value");
      slot.reset();
    }
  }
}

std::string format_event(const HistoryEvent& e) {
  std::ostringstream os;
  os << e.seq << ' ' << e.thread << ' '
     << (e.kind == EventKind::Invoke ? "INV" : "RES") << ' ' << to_string(e.op)
     << ' ' << e.key;
  if (e.ret) os << ' ' << (*e.ret ? "true" : "false");
  return os.str();
}

void write_history(std::ostream& os, const History& h) {
  for (const auto& e : h.events) os << format_event(e) << '\n';
}

History read_history(std::istream& is) {
  History h;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream ls(line);
    HistoryEvent e;
    std::string kind, op, ret;
    if (!(ls >> e.seq >> e.thread >> kind >> op >> e.key))
      throw HistoryError("line " + std::to_string(lineno) + ": malformed event");
    if (kind == "INV")
      e.kind = EventKind::Invoke;
    else if (kind == "RES")
      e.kind = EventKind::Respond;
    else
      throw HistoryError("line " + std::to_string(lineno) +
                         ": expected INV or RES, got '" + kind + "'");
    const auto parsed = parse_op_kind(op);
    if (!parsed)
      throw HistoryError("line " + std::to_string(lineno) +
                         ": unknown operation '" + op + "'");
    e.op = *parsed;
    if (ls >> ret) {
      if (ret == "true")
        e.ret = true;
      else if (ret == "false")
        e.ret = false;
      else
        throw HistoryError("line " + std::to_string(lineno) +
                           ": expected true or false, got '" + ret + "'");
    }
    std::string extra;
    if (ls >> extra)
      throw HistoryError("line " + std::to_string(lineno) +
                         ": trailing input '" + extra + "'");
    h.events.push_back(e);
  }
  return h;
}

History load_history_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw HistoryError("cannot open history file '" + path + "'");
  return read_history(in);
}

HistoryRecorder::HistoryRecorder(std::size_t max_threads)
    : buffers_(std::make_unique<Buffer[]>(max_threads)),
      max_threads_(max_threads) {}

void HistoryRecorder::invoke(ThreadId thread, OpKind op, Key key) {
  if (thread >= max_threads_)
    throw HistoryError("thread id " + std::to_string(thread) +
                       " exceeds recorder capacity");
  const std::uint64_t seq = next_seq_.fetch_add(1, std::memory_order_seq_cst);
  buffers_[thread].events.push_back(
      {seq, thread, EventKind::Invoke, op, key, std::nullopt});
}

void HistoryRecorder::respond(ThreadId thread, OpKind op, Key key, bool ret) {
  if (thread >= max_threads_)
    throw HistoryError("thread id " + std::to_string(thread) +
                       " exceeds recorder capacity");
  const std::uint64_t seq = next_seq_.fetch_add(1, std::memory_order_seq_cst);
  buffers_[thread].events.push_back(
      {seq, thread, EventKind::Respond, op, key, ret});
}

History HistoryRecorder::history() const {
  History h;
  for (std::size_t i = 0; i < max_threads_; ++i)
    h.events.insert(h.events.end(), buffers_[i].events.begin(),
                    buffers_[i].events.end());
  std::sort(h.events.begin(), h.events.end(),
            [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return h;
}

}  // namespace cobst
