#ifndef COBST_SCHEDULE_HPP
#define COBST_SCHEDULE_HPP

/// \file
/// Deterministic interleaving replay of set operations.
///
/// Each logical thread runs on its own OS thread, but exactly one of them
/// makes progress at a time. A thread parks before every shared-memory
/// access, lock attempt and node allocation of the algorithm (a yield
/// point); one granted step lets it perform that access and run on to its
/// next yield point or to the end of its program.
///
/// A thread whose lock attempt found the lock busy is blocked until the lock
/// admits its mode. A thread that restarted although nobody else wrote to
/// the tree during its attempt is blocked until someone does; without that,
/// a schedule could spin it forever on a half-finished removal.
///
/// Script format:
///   setup: 5 3
///   thread 1: delete(3) insert(4)
///   thread 2: contains(3)
///   schedule: 1:6 2:* 1:*
/// `*` runs the thread to the end of its program. Threads that still have
/// work once the schedule is exhausted are drained by always stepping the
/// lowest-id runnable thread.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cobst/history.hpp"
#include "cobst/instrument.hpp"
#include "cobst/linearizability.hpp"
#include "cobst/observable.hpp"
#include "cobst/reclamation.hpp"
#include "cobst/structural_trace.hpp"
#include "cobst/tree_core.hpp"

namespace cobst {

struct ScriptOp {
  OpKind op = OpKind::Contains;
  Key key = 0;

  friend bool operator==(const ScriptOp&, const ScriptOp&) = default;
};

struct ThreadProgram {
  ThreadId id = 0;
  std::vector<ScriptOp> ops;

  friend bool operator==(const ThreadProgram&, const ThreadProgram&) = default;
};

struct ScheduleStep {
  ThreadId thread = 0;
  std::optional<std::uint32_t> count;  // nullopt: run to completion

  friend bool operator==(const ScheduleStep&, const ScheduleStep&) = default;
};

struct ScheduleScript {
  std::vector<Key> setup;
  std::vector<ThreadProgram> threads;
  std::vector<ScheduleStep> schedule;

  friend bool operator==(const ScheduleScript&,
                         const ScheduleScript&) = default;
};

class ScriptError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ScriptError unless thread ids are unique, every thread has at
/// least one operation, the schedule only names defined threads, step
/// counts are positive and all keys are client keys.
void validate_script(const ScheduleScript& script);

[[nodiscard]] std::string format_script(const ScheduleScript& script);
[[nodiscard]] ScheduleScript parse_script(std::string_view text);
[[nodiscard]] ScheduleScript load_script_file(const std::string& path);

/// Seeded random script: `threads` threads with `ops` operations each over
/// keys [0, key_range), a random setup and a random schedule. Meant to be
/// run leniently.
[[nodiscard]] ScheduleScript random_schedule(std::uint64_t seed,
                                             std::size_t threads,
                                             std::size_t ops, Key key_range);

/// True for the lock attempts on edge locks.
[[nodiscard]] bool is_edge_lock_site(Site s) noexcept;

struct RunOptions {
  /// Skip directives that name a blocked or finished thread instead of
  /// failing.
  bool lenient = false;
  /// Run the linearizability and observable-correctness checkers.
  bool check = true;
  /// Record the set of runnable threads before every step.
  bool record_enabled = false;
  std::uint64_t max_steps = 1'000'000;
};

enum class RunStatus : std::uint8_t {
  Completed,
  Deadlock,     // a scheduled or remaining thread can never run
  ScriptError,  // the schedule asks for steps a thread does not have
  StepLimit,
  Crashed,      // an operation threw
};

[[nodiscard]] const char* to_string(RunStatus s) noexcept;

struct OpReport {
  ThreadId thread = 0;
  std::size_t index = 0;
  OpKind op = OpKind::Contains;
  Key key = 0;
  std::optional<bool> result;  // nullopt if the run stopped first
  std::uint32_t restarts = 0;
  std::vector<Site> violations;  // failed lock conditions, in order
};

struct StepRecord {
  ThreadId thread = 0;
  Site site = Site::TraverseReadChild;
};

struct RunReport {
  RunStatus status = RunStatus::Completed;
  std::string error;
  std::vector<OpReport> ops;
  History history;
  StructuralTrace trace;
  std::vector<StepRecord> steps;
  /// Bit i set: thread index i (script order) was runnable before step k.
  std::vector<std::uint32_t> enabled;
  std::uint64_t skipped_directives = 0;

  std::vector<Key> final_keys;
  std::string final_dump;
  ValidationReport validation;
  std::optional<LinearizabilityResult> linearizability;
  std::optional<ObservableReport> observable;
  SetStats stats;
  /// Lock acquisitions the harness saw while a contains was running.
  std::uint64_t contains_lock_acquisitions = 0;

  [[nodiscard]] std::uint64_t restarts() const noexcept;
  [[nodiscard]] std::uint64_t condition_violations() const noexcept;
  [[nodiscard]] std::uint64_t edge_lock_violations() const noexcept;
  /// Completed, structurally valid, and every requested check passed.
  [[nodiscard]] bool ok() const noexcept;
};

[[nodiscard]] RunReport run_script(const ScheduleScript& script,
                                   const RunOptions& options = {});

/// Human-readable summary followed by key=value lines.
[[nodiscard]] std::string format_report(const RunReport& report);

struct ExploreReport {
  bool refused = false;
  std::string refusal;
  /// Interleaving count estimated from the solo step counts.
  double estimate = 0;
  std::uint64_t interleavings = 0;
  std::uint64_t failures = 0;
  std::optional<ScheduleScript> first_failure;
  std::string failure_detail;
  std::uint64_t max_restarts = 0;
  std::uint64_t contains_lock_acquisitions = 0;
  std::set<Site> sites_seen;
  std::array<bool, 4> kinds_seen{};  // indexed by AccessKind

  [[nodiscard]] bool ok() const noexcept { return !refused && failures == 0; }
};

/// Runs every interleaving of the given per-thread programs (thread ids
/// 1..n) from the given setup and checks each one. Refuses when the
/// estimated or the actual number of interleavings exceeds `bound`.
[[nodiscard]] ExploreReport explore_small(
    const std::vector<Key>& setup,
    const std::vector<std::vector<ScriptOp>>& per_thread_ops,
    std::uint64_t bound = 1'000'000);

}  // namespace cobst

#endif  // COBST_SCHEDULE_HPP
