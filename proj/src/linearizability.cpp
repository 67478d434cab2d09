#include "cobst/linearizability.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

namespace cobst {

std::optional<KeySet> set_type_step(const KeySet& state, OpKind op, Key key,
                                    bool ret) {
  const bool present = state.count(key) != 0;
  switch (op) {
    case OpKind::Insert: {
      if (ret == present) return std::nullopt;
      KeySet next = state;
      next.insert(key);
      return next;
    }
    case OpKind::Delete: {
      if (ret != present) return std::nullopt;
      KeySet next = state;
      next.erase(key);
      return next;
    }
    case OpKind::Contains:
      if (ret != present) return std::nullopt;
      return state;
  }
  return std::nullopt;
}

std::vector<Operation> operations_of(const History& h) {
  check_well_formed(h);
  std::vector<Operation> ops;
  std::map<ThreadId, std::size_t> open;
  for (const auto& e : h.events) {
    if (e.kind == EventKind::Invoke) {
      open[e.thread] = ops.size();
      ops.push_back({e.thread, e.op, e.key, std::nullopt, e.seq, std::nullopt});
    } else {
      auto& op = ops[open.at(e.thread)];
      op.ret = e.ret;
      op.respond_seq = e.seq;
      open.erase(e.thread);
    }
  }
  return ops;
}

History history_of(const std::vector<Operation>& ops) {
  History h;
  for (const auto& op : ops) {
    h.events.push_back(
        {op.invoke_seq, op.thread, EventKind::Invoke, op.op, op.key, {}});
    if (op.respond_seq)
      h.events.push_back(
          {*op.respond_seq, op.thread, EventKind::Respond, op.op, op.key,
           op.ret});
  }
  std::sort(h.events.begin(), h.events.end(),
            [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return h;
}

std::vector<History> complete_history(const History& h) {
  const std::vector<Operation> ops = operations_of(h);
  std::uint64_t max_seq = 0;
  for (const auto& e : h.events) max_seq = std::max(max_seq, e.seq);

  std::vector<std::size_t> undecided;  // pending insert/delete
  std::vector<Operation> base;
  for (const auto& op : ops) {
    if (!op.pending())
      base.push_back(op);
    else if (op.op != OpKind::Contains)
      undecided.push_back(base.size()), base.push_back(op);
    // pending contains: dropped
  }
  if (undecided.size() >= 20)
    throw HistoryTooLarge("too many pending updates to enumerate completions");

  std::vector<History> out;
  const std::uint64_t choices = std::uint64_t{1} << undecided.size();
  for (std::uint64_t mask = 0; mask < choices; ++mask) {
    std::vector<Operation> completed;
    std::uint64_t next_seq = max_seq + 1;
    std::vector<bool> drop(base.size(), false);
    for (std::size_t j = 0; j < undecided.size(); ++j) {
      auto& op = base[undecided[j]];
      if ((mask >> j) & 1) {
        op.ret = true;
        op.respond_seq = next_seq++;
      } else {
        drop[undecided[j]] = true;
      }
    }
    for (std::size_t i = 0; i < base.size(); ++i)
      if (!drop[i]) completed.push_back(base[i]);
    out.push_back(history_of(completed));
    for (std::size_t j : undecided) {
      base[j].ret.reset();
      base[j].respond_seq.reset();
    }
  }
  return out;
}

namespace {

class Search {
 public:
  Search(const std::vector<Operation>& ops, const KeySet& initial)
      : ops_(ops) {
    for (const auto& op : ops_) {
      if (!key_index_.count(op.key)) {
        const auto idx = key_index_.size();
        key_index_[op.key] = static_cast<unsigned>(idx);
      }
    }
    // Keys no operation touches cannot affect any return value.
    for (const auto& [key, idx] : key_index_)
      if (initial.count(key)) initial_ |= std::uint32_t{1} << idx;
    full_ = ops_.size() == 32 ? ~std::uint32_t{0}
                              : (std::uint32_t{1} << ops_.size()) - 1;
  }

  bool run() { return dfs(0, initial_); }

  std::vector<Operation> order() const {
    std::vector<Operation> r;
    for (auto i : path_) r.push_back(ops_[i]);
    return r;
  }
  std::vector<Operation> best_prefix() const {
    std::vector<Operation> r;
    for (auto i : best_path_) r.push_back(ops_[i]);
    return r;
  }
  std::vector<Operation> best_frontier() const {
    std::vector<Operation> r;
    for (auto i : best_frontier_) r.push_back(ops_[i]);
    return r;
  }
  std::size_t best_depth() const { return best_path_.size(); }

 private:
  static constexpr std::uint64_t kNever =
      std::numeric_limits<std::uint64_t>::max();

  std::uint64_t respond_of(std::size_t i) const {
    return ops_[i].respond_seq.value_or(kNever);
  }

  bool dfs(std::uint32_t placed, std::uint32_t state) {
    if (placed == full_) return true;
    if (!failed_.insert((std::uint64_t{placed} << 32) | state).second)
      return false;

    std::uint64_t min_respond = kNever;
    for (std::size_t i = 0; i < ops_.size(); ++i)
      if (!(placed >> i & 1)) min_respond = std::min(min_respond, respond_of(i));

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < ops_.size(); ++i) {
      if (placed >> i & 1) continue;
      if (ops_[i].invoke_seq > min_respond) continue;
      eligible.push_back(i);
      const auto next = apply(state, ops_[i]);
      if (!next) continue;
      path_.push_back(i);
      if (dfs(placed | (std::uint32_t{1} << i), *next)) return true;
      path_.pop_back();
    }
    if (!have_best_ || path_.size() > best_path_.size()) {
      have_best_ = true;
      best_path_ = path_;
      best_frontier_ = eligible;
    }
    return false;
  }

  std::optional<std::uint32_t> apply(std::uint32_t state,
                                     const Operation& op) const {
    const std::uint32_t bit = std::uint32_t{1} << key_index_.at(op.key);
    const bool present = (state & bit) != 0;
    const bool ret = op.ret.value_or(true);
    switch (op.op) {
      case OpKind::Insert:
        if (ret == present) return std::nullopt;
        return state | bit;
      case OpKind::Delete:
        if (ret != present) return std::nullopt;
        return state & ~bit;
      case OpKind::Contains:
        if (ret != present) return std::nullopt;
        return state;
    }
    return std::nullopt;
  }

  const std::vector<Operation>& ops_;
  std::map<Key, unsigned> key_index_;
  std::uint32_t full_ = 0;
  std::uint32_t initial_ = 0;
  std::unordered_set<std::uint64_t> failed_;
  std::vector<std::size_t> path_;
  std::vector<std::size_t> best_path_;
  std::vector<std::size_t> best_frontier_;
  bool have_best_ = false;
};

}  // namespace

LinearizabilityResult is_linearizable(const History& h,
                                      const CheckerOptions& options) {
  const std::vector<Operation> ops = operations_of(h);
  // Placed-set and key-set bitmasks are 32 bits wide.
  const std::size_t bound = std::min<std::size_t>(options.max_operations, 32);
  if (ops.size() > bound)
    throw HistoryTooLarge("history has " + std::to_string(ops.size()) +
                          " operations; the checker bound is " +
                          std::to_string(bound));

  LinearizabilityResult result;
  std::size_t best = 0;
  bool have_best = false;
  for (const History& completion : complete_history(h)) {
    const std::vector<Operation> cops = operations_of(completion);
    Search search(cops, options.initial);
    if (search.run()) {
      result.linearizable = true;
      result.witness = search.order();
      result.best_prefix.clear();
      result.frontier.clear();
      return result;
    }
    if (!have_best || search.best_depth() > best) {
      have_best = true;
      best = search.best_depth();
      result.best_prefix = search.best_prefix();
      result.frontier = search.best_frontier();
    }
  }
  return result;
}

std::string describe(const Operation& op) {
  std::ostringstream os;
  os << "t" << op.thread << ':' << to_string(op.op) << '(' << op.key << ")->";
  if (op.ret)
    os << (*op.ret ? "true" : "false");
  else
    os << "pending";
  os << " [" << op.invoke_seq << ',';
  if (op.respond_seq)
    os << *op.respond_seq;
  else
    os << "inf";
  os << ']';
  return os.str();
}

std::string format_result(const LinearizabilityResult& r) {
  std::ostringstream os;
  if (r.linearizable) {
    os << "LINEARIZABLE\n";
    for (std::size_t i = 0; i < r.witness.size(); ++i)
      os << "  " << i + 1 << ". " << describe(r.witness[i]) << '\n';
  } else {
    os << "NOT LINEARIZABLE\n";
    os << "  longest placeable prefix:\n";
    for (const auto& op : r.best_prefix) os << "    " << describe(op) << '\n';
    os << "  failing frontier (none can be placed next):\n";
    for (const auto& op : r.frontier) os << "    " << describe(op) << '\n';
  }
  return os.str();
}

}  // namespace cobst
