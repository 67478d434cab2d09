#ifndef COBST_LINEARIZABILITY_HPP
#define COBST_LINEARIZABILITY_HPP

/// \file
/// Black-box linearizability checking of set histories.
///
/// Pending operations are handled by enumerating completions: a pending
/// contains is dropped, a pending insert/delete is either dropped or
/// completed with `true`. Each completion is searched Wing-Gong style: pick
/// any operation that no other unplaced operation precedes in real time,
/// apply it to the abstract set, recurse, and memoize failed
/// (placed-set, abstract-state) pairs.

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cobst/history.hpp"

namespace cobst {

using KeySet = std::set<Key>;

/// Sequential set semantics. Returns the successor state, or nullopt when
/// `ret` contradicts set semantics.
[[nodiscard]] std::optional<KeySet> set_type_step(const KeySet& state,
                                                  OpKind op, Key key,
                                                  bool ret);

/// An invocation paired with its response (if any).
struct Operation {
  ThreadId thread = 0;
  OpKind op = OpKind::Contains;
  Key key = 0;
  std::optional<bool> ret;          // nullopt while pending
  std::uint64_t invoke_seq = 0;
  std::optional<std::uint64_t> respond_seq;

  [[nodiscard]] bool pending() const noexcept { return !respond_seq; }
  friend bool operator==(const Operation&, const Operation&) = default;
};

/// Pairs events into operations, ordered by invocation. Throws HistoryError
/// on a malformed history.
[[nodiscard]] std::vector<Operation> operations_of(const History& h);

/// Rebuilds a history from operations (pending ones stay pending).
[[nodiscard]] History history_of(const std::vector<Operation>& ops);

/// All candidate completions of `h`.
[[nodiscard]] std::vector<History> complete_history(const History& h);

class HistoryTooLarge : public HistoryError {
 public:
  using HistoryError::HistoryError;
};

struct CheckerOptions {
  std::size_t max_operations = 24;
  /// Abstract set contents before the first operation.
  KeySet initial;
};

struct LinearizabilityResult {
  bool linearizable = false;
  /// Sequential order of the completed operations, when linearizable.
  std::vector<Operation> witness;
  /// When not linearizable: the longest placeable prefix found and the
  /// operations that were eligible next but none of which could be placed.
  std::vector<Operation> best_prefix;
  std::vector<Operation> frontier;
};

/// Throws HistoryError on a malformed history and HistoryTooLarge when it
/// has more operations than `options.max_operations`.
[[nodiscard]] LinearizabilityResult is_linearizable(
    const History& h, const CheckerOptions& options = {});

[[nodiscard]] std::string describe(const Operation& op);
[[nodiscard]] std::string format_result(const LinearizabilityResult& r);

}  // namespace cobst

#endif  // COBST_LINEARIZABILITY_HPP
