#ifndef COBST_TESTS_SUPPORT_HISTORIES_HPP
#define COBST_TESTS_SUPPORT_HISTORIES_HPP

// Brute-force linearizability oracle and random history generation, shared
// by the unit tests and the acceptance binary.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <vector>

#include "cobst/history.hpp"

namespace cobst::test_support {

struct OracleOp {
  OpKind op;
  Key key;
  std::optional<bool> ret;
  std::uint64_t inv;
  std::uint64_t res;  // max() when pending
};

inline std::vector<OracleOp> oracle_ops(const History& h) {
  std::vector<OracleOp> ops;
  std::map<ThreadId, std::size_t> open;
  for (const auto& e : h.events) {
    if (e.kind == EventKind::Invoke) {
      open[e.thread] = ops.size();
      ops.push_back({e.op, e.key, std::nullopt, e.seq,
                     std::numeric_limits<std::uint64_t>::max()});
    } else {
      auto& op = ops[open.at(e.thread)];
      op.ret = e.ret;
      op.res = e.seq;
    }
  }
  return ops;
}

// True when some total order of `ops` respects real time and set semantics.
inline bool any_permutation_legal(const std::vector<OracleOp>& ops,
                                  const std::set<Key>& initial) {
  std::vector<std::size_t> order(ops.size());
  std::iota(order.begin(), order.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < order.size() && ok; ++i)
      for (std::size_t j = i + 1; j < order.size() && ok; ++j)
        if (ops[order[j]].res < ops[order[i]].inv) ok = false;
    std::set<Key> s = initial;
    for (std::size_t i = 0; i < order.size() && ok; ++i) {
      const OracleOp& op = ops[order[i]];
      const bool present = s.count(op.key) != 0;
      const bool ret = *op.ret;
      switch (op.op) {
        case OpKind::Insert:
          ok = ret == !present;
          s.insert(op.key);
          break;
        case OpKind::Delete:
          ok = ret == present;
          s.erase(op.key);
          break;
        case OpKind::Contains:
          ok = ret == present;
          break;
      }
    }
    if (ok) return true;
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

// Tries every way of resolving pending operations (dropped, or completed
// with either return value) and every order of the result.
inline bool permutation_oracle(const History& h,
                               const std::set<Key>& initial = {}) {
  const auto ops = oracle_ops(h);
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < ops.size(); ++i)
    if (!ops[i].ret) pending.push_back(i);
  std::size_t combos = 1;
  for (std::size_t i = 0; i < pending.size(); ++i) combos *= 3;
  for (std::size_t c = 0; c < combos; ++c) {
    std::vector<OracleOp> chosen;
    std::size_t code = c;
    std::vector<int> choice(ops.size(), -1);
    for (std::size_t p : pending) {
      choice[p] = static_cast<int>(code % 3);
      code /= 3;
    }
    for (std::size_t i = 0; i < ops.size(); ++i) {
      OracleOp op = ops[i];
      if (choice[i] == 0) continue;
      if (choice[i] > 0) op.ret = choice[i] == 1;
      chosen.push_back(op);
    }
    if (any_permutation_legal(chosen, initial)) return true;
  }
  return false;
}

// A history of an atomic set: every operation takes effect at a random
// point between its invocation and response. Some operations may be left
// pending at the end.
inline History random_linearizable_history(std::mt19937_64& rng,
                                           std::size_t max_ops,
                                           std::size_t threads, Key keys,
                                           bool allow_pending) {
  struct Thread {
    int state = 0;  // 0 idle, 1 invoked, 2 took effect
    OpKind op{};
    Key key = 0;
    bool ret = false;
  };
  std::vector<Thread> ts(threads);
  std::set<Key> s;
  History h;
  std::uint64_t seq = 1;
  const std::size_t n_ops = 1 + rng() % max_ops;
  std::size_t invoked = 0;
  auto busy = [&] {
    return std::any_of(ts.begin(), ts.end(),
                       [](const Thread& t) { return t.state != 0; });
  };
  while (invoked < n_ops || busy()) {
    if (allow_pending && invoked == n_ops && rng() % 8 == 0) break;
    const auto t = static_cast<ThreadId>(rng() % threads);
    Thread& th = ts[t];
    if (th.state == 0) {
      if (invoked == n_ops) continue;
      th.op = static_cast<OpKind>(rng() % 3);
      th.key = static_cast<Key>(rng() % static_cast<std::uint64_t>(keys));
      h.events.push_back(
          {seq++, t, EventKind::Invoke, th.op, th.key, std::nullopt});
      ++invoked;
      th.state = 1;
    } else if (th.state == 1) {
      const bool present = s.count(th.key) != 0;
      switch (th.op) {
        case OpKind::Insert:
          th.ret = !present;
          s.insert(th.key);
          break;
        case OpKind::Delete:
          th.ret = present;
          s.erase(th.key);
          break;
        case OpKind::Contains:
          th.ret = present;
          break;
      }
      th.state = 2;
    } else {
      h.events.push_back({seq++, t, EventKind::Respond, th.op, th.key, th.ret});
      th.state = 0;
    }
  }
  return h;
}

// Flips the return value of one random completed operation. Returns false
// when the history has none.
inline bool flip_random_response(History& h, std::mt19937_64& rng) {
  std::vector<std::size_t> responses;
  for (std::size_t i = 0; i < h.events.size(); ++i)
    if (h.events[i].kind == EventKind::Respond) responses.push_back(i);
  if (responses.empty()) return false;
  auto& e = h.events[responses[rng() % responses.size()]];
  e.ret = !*e.ret;
  return true;
}

inline std::size_t operation_count(const History& h) {
  return static_cast<std::size_t>(
      std::count_if(h.events.begin(), h.events.end(), [](const auto& e) {
        return e.kind == EventKind::Invoke;
      }));
}

}  // namespace cobst::test_support

#endif  // COBST_TESTS_SUPPORT_HISTORIES_HPP
