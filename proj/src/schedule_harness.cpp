#include <algorithm>
#include <bit>
#include <cmath>
#include <condition_variable>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include "cobst/concurrent_set.hpp"
#include "cobst/schedule.hpp"

namespace cobst {

const char* to_string(RunStatus s) noexcept {
  switch (s) {
    case RunStatus::Completed:
      return "completed";
    case RunStatus::Deadlock:
      return "deadlock";
    case RunStatus::ScriptError:
      return "script-error";
    case RunStatus::StepLimit:
      return "step-limit";
    case RunStatus::Crashed:
      return "crashed";
  }
  return "?";
}

bool is_edge_lock_site(Site s) noexcept {
  switch (s) {
    case Site::InsertLockEdgeNull:
    case Site::OneChildLockCurrEdge:
    case Site::OneChildLockPrevEdge:
    case Site::LeafLockPrevEdgeVal:
    case Site::RoutingParentLockSiblingEdge:
    case Site::RoutingParentLockGprevEdge:
      return true;
    default:
      return false;
  }
}

std::uint64_t RunReport::restarts() const noexcept {
  std::uint64_t n = 0;
  for (const auto& op : ops) n += op.restarts;
  return n;
}

std::uint64_t RunReport::condition_violations() const noexcept {
  std::uint64_t n = 0;
  for (const auto& op : ops) n += op.violations.size();
  return n;
}

std::uint64_t RunReport::edge_lock_violations() const noexcept {
  std::uint64_t n = 0;
  for (const auto& op : ops)
    n += static_cast<std::uint64_t>(
        std::count_if(op.violations.begin(), op.violations.end(),
                      [](Site s) { return is_edge_lock_site(s); }));
  return n;
}

bool RunReport::ok() const noexcept {
  return status == RunStatus::Completed && error.empty() && validation.ok() &&
         (!linearizability || linearizability->linearizable) &&
         (!observable || observable->ok());
}

namespace {

/// Thrown out of a parked thread to unwind it when a run is abandoned.
struct Aborted {};

class Engine;

struct HarnessInstrument {
  static constexpr bool kTracksNodes = true;
  static constexpr bool kBlockOnContention = true;

  Engine* engine = nullptr;

  void access(Site s);
  bool on_contended(const CondRwLock& lock, LockMode mode);
  void on_locked(const CondRwLock& lock, LockMode mode) noexcept;
  void on_unlocked(const CondRwLock& lock, LockMode mode) noexcept;
  void on_condition_violated(Site s);
  void on_attempt_start();
  void on_restart();
  void on_write(const StructuralEvent& e);
  void on_unlink(const Node& n);
  [[nodiscard]] UnlinkedRegistry& unlinked() const;
};

using HarnessSet = BasicConcurrentSet<HarnessInstrument>;

struct Worker {
  enum class Status : std::uint8_t { Starting, Parked, Running, Done };

  std::size_t index = 0;
  ThreadId id = 0;
  std::vector<ScriptOp> ops;
  Status status = Status::Starting;
  std::size_t current = 0;
  bool invoked = false;
  Site site = Site::TraverseReadChild;  // access the thread is parked at

  const CondRwLock* wait_lock = nullptr;
  LockMode wait_mode = LockMode::Write;
  bool give_up = false;  // granted a step while its lock was still busy
  bool wait_writes = false;
  std::uint64_t wait_writes_base = 0;
  std::uint64_t attempt_writes_base = 0;

  std::vector<std::pair<const CondRwLock*, LockMode>> held;
  std::vector<OpReport> reports;
  std::string error;
  std::thread thread;
};

thread_local Worker* tl_worker = nullptr;

class Engine {
 public:
  explicit Engine(const ScheduleScript& script) {
    set_ = std::make_unique<HarnessSet>(ReclaimMode::Never,
                                        HarnessInstrument{this});
    trace_.root = set_->root()->id;
    for (Key k : script.setup) set_->insert(k);
    for (std::size_t i = 0; i < script.threads.size(); ++i) {
      auto w = std::make_unique<Worker>();
      w->index = i;
      w->id = script.threads[i].id;
      w->ops = script.threads[i].ops;
      for (std::size_t j = 0; j < w->ops.size(); ++j)
        w->reports.push_back(
            {w->id, j, w->ops[j].op, w->ops[j].key, std::nullopt, 0, {}});
      workers_.push_back(std::move(w));
    }
  }

  ~Engine() { finish(); }

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Starts the threads one at a time; each runs to its first yield point.
  void start() {
    for (auto& w : workers_) {
      Worker* raw = w.get();
      std::unique_lock lk(m_);
      running_ = raw->index;
      raw->thread = std::thread([this, raw] { body(*raw); });
      cv_.wait(lk, [&] { return running_ != raw->index; });
    }
  }

  /// Unwinds threads still parked and joins everything.
  void finish() {
    {
      std::lock_guard lk(m_);
      abort_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_)
      if (w->thread.joinable()) w->thread.join();
  }

  [[nodiscard]] std::size_t size() const noexcept { return workers_.size(); }

  [[nodiscard]] std::optional<std::size_t> index_of(ThreadId id) const {
    for (const auto& w : workers_)
      if (w->id == id) return w->index;
    return std::nullopt;
  }

  [[nodiscard]] bool done(std::size_t i) const {
    std::lock_guard lk(m_);
    return workers_[i]->status == Worker::Status::Done;
  }

  [[nodiscard]] bool all_done() const {
    std::lock_guard lk(m_);
    return std::all_of(workers_.begin(), workers_.end(), [](const auto& w) {
      return w->status == Worker::Status::Done;
    });
  }

  [[nodiscard]] bool enabled(std::size_t i) const {
    std::lock_guard lk(m_);
    return enabled_locked(*workers_[i]);
  }

  [[nodiscard]] std::uint32_t enabled_mask() const {
    std::lock_guard lk(m_);
    std::uint32_t mask = 0;
    for (const auto& w : workers_)
      if (enabled_locked(*w)) mask |= std::uint32_t{1} << w->index;
    return mask;
  }

  /// Grants one step to a runnable thread and waits until it parks again
  /// or finishes.
  void step(std::size_t i) {
    std::unique_lock lk(m_);
    Worker& w = *workers_[i];
    w.give_up = lock_blocked(w);
    w.wait_lock = nullptr;
    w.wait_writes = false;
    steps_.push_back({w.id, w.site});
    running_ = i;
    cv_.notify_all();
    cv_.wait(lk, [&] { return running_ != i; });
  }

  /// Why thread i cannot run, following the chain of lock holders.
  [[nodiscard]] std::string describe_block(std::size_t i) const {
    std::lock_guard lk(m_);
    std::ostringstream os;
    std::vector<std::size_t> chain{i};
    std::size_t cur = i;
    for (;;) {
      const Worker& w = *workers_[cur];
      if (w.status == Worker::Status::Done) {
        os << "thread " << w.id << " has finished its program";
        break;
      }
      if (w.wait_writes && writes_ <= w.wait_writes_base) {
        os << "thread " << w.id
           << " restarted without any other thread writing and waits for one";
        break;
      }
      if (w.wait_lock == nullptr || w.wait_lock->admits(w.wait_mode)) {
        os << "thread " << w.id << " is runnable";
        break;
      }
      os << "thread " << w.id << " waits at " << to_string(w.site) << " ("
         << (w.wait_mode == LockMode::Write ? "write" : "read") << ") ";
      std::optional<std::size_t> holder;
      for (const auto& other : workers_)
        for (const auto& h : other->held)
          if (h.first == w.wait_lock && !holder) holder = other->index;
      if (!holder) {
        os << "for a lock with no recorded holder";
        break;
      }
      os << "for a lock held by thread " << workers_[*holder]->id;
      if (std::find(chain.begin(), chain.end(), *holder) != chain.end()) {
        os << "; cycle:";
        for (std::size_t c : chain) os << ' ' << workers_[c]->id << " ->";
        os << ' ' << workers_[*holder]->id;
        break;
      }
      chain.push_back(*holder);
      if (enabled_locked(*workers_[*holder])) {
        os << ", which is runnable but not scheduled to release it; cycle:";
        for (std::size_t c : chain) os << ' ' << workers_[c]->id << " ->";
        os << ' ' << w.id;
        break;
      }
      os << "; ";
      cur = *holder;
    }
    return os.str();
  }

  // Results; valid after finish().
  [[nodiscard]] HarnessSet& set() noexcept { return *set_; }
  [[nodiscard]] const std::vector<std::unique_ptr<Worker>>& workers() const {
    return workers_;
  }
  [[nodiscard]] History& history() noexcept { return history_; }
  [[nodiscard]] StructuralTrace& trace() noexcept { return trace_; }
  [[nodiscard]] std::vector<StepRecord>& steps() noexcept { return steps_; }
  [[nodiscard]] std::uint64_t contains_locks() const noexcept {
    return contains_locks_;
  }

 private:
  friend struct HarnessInstrument;

  static bool lock_blocked(const Worker& w) {
    return w.wait_lock != nullptr && !w.wait_lock->admits(w.wait_mode);
  }

  /// True when following lock holders from w's awaited lock leads back to
  /// w. Such a thread may run: its attempt then gives up, as the real set
  /// does once its backoff budget is spent.
  bool in_lock_cycle(const Worker& w) const {
    std::vector<const Worker*> stack{&w};
    std::vector<bool> seen(workers_.size(), false);
    while (!stack.empty()) {
      const Worker* cur = stack.back();
      stack.pop_back();
      if (cur->status != Worker::Status::Parked || !lock_blocked(*cur))
        continue;
      for (const auto& other : workers_) {
        const bool holds = std::any_of(
            other->held.begin(), other->held.end(),
            [&](const auto& h) { return h.first == cur->wait_lock; });
        if (!holds) continue;
        if (other.get() == &w) return true;
        if (!seen[other->index]) {
          seen[other->index] = true;
          stack.push_back(other.get());
        }
      }
    }
    return false;
  }

  bool enabled_locked(const Worker& w) const {
    if (w.status != Worker::Status::Parked) return false;
    if (lock_blocked(w) && !in_lock_cycle(w)) return false;
    if (w.wait_writes && writes_ <= w.wait_writes_base) return false;
    return true;
  }

  void body(Worker& w) {
    tl_worker = &w;
    try {
      for (std::size_t i = 0; i < w.ops.size(); ++i) {
        w.current = i;
        w.invoked = false;
        const ScriptOp op = w.ops[i];
        OpOutcome out;
        switch (op.op) {
          case OpKind::Insert:
            out = set_->insert_ex(op.key);
            break;
          case OpKind::Delete:
            out = set_->remove_ex(op.key);
            break;
          case OpKind::Contains:
            out = set_->contains_ex(op.key);
            break;
        }
        std::lock_guard lk(m_);
        w.reports[i].result = out.result;
        w.reports[i].restarts = out.restarts;
        history_.events.push_back({seq_++, w.id, EventKind::Respond, op.op,
                                   op.key, out.result});
      }
    } catch (const Aborted&) {
    } catch (const std::exception& e) {
      std::lock_guard lk(m_);
      w.error = e.what();
    }
    tl_worker = nullptr;
    std::lock_guard lk(m_);
    w.status = Worker::Status::Done;
    if (running_ == w.index) running_.reset();
    cv_.notify_all();
  }

  void park(Worker& w, Site s) {
    std::unique_lock lk(m_);
    w.site = s;
    w.status = Worker::Status::Parked;
    running_.reset();
    cv_.notify_all();
    cv_.wait(lk, [&] { return abort_ || running_ == w.index; });
    if (abort_) throw Aborted{};
    w.status = Worker::Status::Running;
    if (!w.invoked) {
      w.invoked = true;
      const ScriptOp& op = w.ops[w.current];
      history_.events.push_back(
          {seq_++, w.id, EventKind::Invoke, op.op, op.key, std::nullopt});
    }
  }

  mutable std::mutex m_;
  std::condition_variable cv_;
  std::optional<std::size_t> running_;
  bool abort_ = false;

  std::uint64_t seq_ = 1;
  History history_;
  StructuralTrace trace_;
  std::vector<StepRecord> steps_;
  std::uint64_t writes_ = 0;
  std::uint64_t contains_locks_ = 0;
  mutable UnlinkedRegistry registry_;

  std::vector<std::unique_ptr<Worker>> workers_;
  std::unique_ptr<HarnessSet> set_;
};

// Hooks run on the thread that currently holds the step, so they need no
// locking beyond what park() and step() already provide. During setup no
// worker is bound and nothing yields.

void HarnessInstrument::access(Site s) {
  if (Worker* w = tl_worker) engine->park(*w, s);
}

bool HarnessInstrument::on_contended(const CondRwLock& lock, LockMode mode) {
  Worker* w = tl_worker;
  if (w == nullptr) return true;
  if (w->give_up) {
    w->give_up = false;
    return false;
  }
  w->wait_lock = &lock;
  w->wait_mode = mode;
  return true;
}

void HarnessInstrument::on_locked(const CondRwLock& lock,
                                  LockMode mode) noexcept {
  if (Worker* w = tl_worker) {
    w->held.emplace_back(&lock, mode);
    if (w->ops[w->current].op == OpKind::Contains) ++engine->contains_locks_;
  }
}

void HarnessInstrument::on_unlocked(const CondRwLock& lock,
                                    LockMode mode) noexcept {
  if (Worker* w = tl_worker) {
    auto it = std::find(w->held.begin(), w->held.end(),
                        std::pair<const CondRwLock*, LockMode>{&lock, mode});
    if (it != w->held.end()) w->held.erase(it);
  }
}

void HarnessInstrument::on_condition_violated(Site s) {
  if (Worker* w = tl_worker) w->reports[w->current].violations.push_back(s);
}

void HarnessInstrument::on_attempt_start() {
  if (Worker* w = tl_worker) w->attempt_writes_base = engine->writes_;
}

void HarnessInstrument::on_restart() {
  Worker* w = tl_worker;
  if (w != nullptr && engine->writes_ == w->attempt_writes_base) {
    w->wait_writes = true;
    w->wait_writes_base = engine->writes_;
  }
}

void HarnessInstrument::on_write(const StructuralEvent& e) {
  engine->trace_.events.push_back(e);
  if (e.kind != StructuralEvent::Kind::Create) ++engine->writes_;
}

void HarnessInstrument::on_unlink(const Node& n) {
  engine->registry_.add(n.id);
}

UnlinkedRegistry& HarnessInstrument::unlinked() const {
  return engine->registry_;
}

std::string describe_all_blocked(const Engine& e) {
  std::string out;
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (e.done(i)) continue;
    if (!out.empty()) out += "; ";
    out += e.describe_block(i);
  }
  return out;
}

std::vector<ScheduleStep> run_length(const std::vector<ThreadId>& choices) {
  std::vector<ScheduleStep> out;
  for (ThreadId t : choices) {
    if (!out.empty() && out.back().thread == t)
      ++*out.back().count;
    else
      out.push_back({t, 1u});
  }
  return out;
}

}  // namespace

RunReport run_script(const ScheduleScript& script, const RunOptions& options) {
  validate_script(script);
  RunReport r;
  Engine e(script);
  e.start();

  std::uint64_t steps = 0;
  auto do_step = [&](std::size_t i) {
    if (steps >= options.max_steps) {
      r.status = RunStatus::StepLimit;
      r.error = "step limit of " + std::to_string(options.max_steps) +
                " reached";
      return false;
    }
    if (options.record_enabled) r.enabled.push_back(e.enabled_mask());
    e.step(i);
    ++steps;
    return true;
  };

  bool stopped = false;
  for (std::size_t d = 0; d < script.schedule.size() && !stopped; ++d) {
    const ScheduleStep& dir = script.schedule[d];
    const std::size_t i = *e.index_of(dir.thread);
    const std::uint32_t n =
        dir.count.value_or(std::numeric_limits<std::uint32_t>::max());
    for (std::uint32_t k = 0; k < n; ++k) {
      if (e.done(i)) {
        if (!dir.count) break;
        if (options.lenient) {
          ++r.skipped_directives;
          break;
        }
        r.status = RunStatus::ScriptError;
        r.error = "directive " + std::to_string(d + 1) + ": thread " +
                  std::to_string(dir.thread) + " finished after " +
                  std::to_string(k) + " of " + std::to_string(n) + " steps";
        stopped = true;
        break;
      }
      if (!e.enabled(i)) {
        if (options.lenient) {
          ++r.skipped_directives;
          break;
        }
        r.status = RunStatus::Deadlock;
        r.error = "deadlock in script at directive " + std::to_string(d + 1) +
                  " (" + std::to_string(dir.thread) + ":" +
                  (dir.count ? std::to_string(*dir.count) : "*") +
                  "): " + e.describe_block(i);
        stopped = true;
        break;
      }
      if (!do_step(i)) {
        stopped = true;
        break;
      }
    }
  }
  while (!stopped && !e.all_done()) {
    const std::uint32_t mask = e.enabled_mask();
    if (mask == 0) {
      r.status = RunStatus::Deadlock;
      r.error = "no runnable thread: " + describe_all_blocked(e);
      break;
    }
    if (!do_step(static_cast<std::size_t>(std::countr_zero(mask)))) break;
  }
  e.finish();

  for (const auto& w : e.workers()) {
    if (!w->error.empty() && r.status == RunStatus::Completed) {
      r.status = RunStatus::Crashed;
      r.error = "thread " + std::to_string(w->id) + ": " + w->error;
    }
    r.ops.insert(r.ops.end(), w->reports.begin(), w->reports.end());
  }
  r.history = std::move(e.history());
  r.trace = std::move(e.trace());
  r.steps = std::move(e.steps());
  r.final_keys = e.set().keys();
  r.final_dump = e.set().dump();
  r.stats = e.set().stats();
  r.contains_lock_acquisitions = e.contains_locks();

  if (r.status == RunStatus::Completed) {
    r.validation = e.set().validate();
    if (options.check) {
      try {
        CheckerOptions copts;
        copts.initial.insert(script.setup.begin(), script.setup.end());
        r.linearizability = is_linearizable(r.history, copts);
      } catch (const HistoryTooLarge& ex) {
        r.error = ex.what();
      }
      r.observable = check_observable_correctness(r.trace);
    }
  }
  return r;
}

std::string format_report(const RunReport& r) {
  std::ostringstream os;
  os << "run " << to_string(r.status) << '\n';
  if (!r.error.empty()) os << "error: " << r.error << '\n';
  for (const auto& op : r.ops) {
    os << "thread " << op.thread << " op " << op.index << ": "
       << to_string(op.op) << '(' << op.key << ") -> ";
    if (op.result)
      os << (*op.result ? "true" : "false");
    else
      os << "unfinished";
    os << ", restarts " << op.restarts << '\n';
    for (Site s : op.violations)
      os << "  condition violated at " << to_string(s) << '\n';
  }
  os << "final tree: " << r.final_dump << '\n';
  if (r.status == RunStatus::Completed) {
    os << "structure: " << (r.validation.ok() ? "ok" : "VIOLATED") << '\n'
       << r.validation.to_string();
    if (r.linearizability) os << format_result(*r.linearizability);
    if (r.observable)
      os << "observable correctness: "
         << (r.observable->ok() ? "ok" : "VIOLATED") << '\n'
         << r.observable->to_string();
  }

  os << "status=" << to_string(r.status) << '\n'
     << "ok=" << (r.ok() ? "true" : "false") << '\n'
     << "steps=" << r.steps.size() << '\n'
     << "ops=" << r.ops.size() << '\n'
     << "restarts=" << r.restarts() << '\n'
     << "condition_violations=" << r.condition_violations() << '\n'
     << "edge_lock_violations=" << r.edge_lock_violations() << '\n'
     << "skipped_directives=" << r.skipped_directives << '\n'
     << "contains_lock_acquisitions="
     << r.contains_lock_acquisitions + r.stats.contains_lock_acquisitions
     << '\n'
     << "final_keys=";
  for (std::size_t i = 0; i < r.final_keys.size(); ++i)
    os << (i ? " " : "") << r.final_keys[i];
  os << '\n';
  for (const auto& op : r.ops) {
    os << "result.t" << op.thread << '.' << op.index << '=';
    if (op.result)
      os << (*op.result ? "true" : "false");
    else
      os << "unfinished";
    os << '\n';
  }
  if (r.status == RunStatus::Completed) {
    os << "structure_ok=" << (r.validation.ok() ? "true" : "false") << '\n';
    if (r.linearizability)
      os << "linearizable="
         << (r.linearizability->linearizable ? "true" : "false") << '\n';
    if (r.observable)
      os << "observable_ok=" << (r.observable->ok() ? "true" : "false")
         << '\n';
  }
  return os.str();
}

ExploreReport explore_small(
    const std::vector<Key>& setup,
    const std::vector<std::vector<ScriptOp>>& per_thread_ops,
    std::uint64_t bound) {
  ExploreReport report;
  ScheduleScript base;
  base.setup = setup;
  for (std::size_t i = 0; i < per_thread_ops.size(); ++i)
    base.threads.push_back(
        {static_cast<ThreadId>(i + 1), per_thread_ops[i]});
  validate_script(base);

  // Multinomial over solo step counts.
  double log_count = 0;
  std::uint64_t total = 0;
  for (const auto& t : base.threads) {
    ScheduleScript solo{setup, {t}, {}};
    const RunReport r = run_script(solo, {.check = false});
    if (r.status != RunStatus::Completed) {
      report.refused = true;
      report.refusal = "solo run of thread " + std::to_string(t.id) +
                       " did not complete: " + r.error;
      return report;
    }
    const auto n = r.steps.size();
    total += n;
    log_count -= std::lgamma(static_cast<double>(n) + 1);
  }
  log_count += std::lgamma(static_cast<double>(total) + 1);
  report.estimate = std::exp(log_count);
  if (report.estimate > static_cast<double>(bound)) {
    report.refused = true;
    report.refusal = "estimated " + std::to_string(report.estimate) +
                     " interleavings exceed the bound of " +
                     std::to_string(bound);
    return report;
  }

  // Stateless depth-first search: replay a prefix of choices, then always
  // pick the lowest runnable thread; backtrack at the deepest step that had
  // an untried alternative.
  std::vector<ThreadId> prefix;
  for (;;) {
    if (report.interleavings >= bound) {
      report.refused = true;
      report.refusal = "more than " + std::to_string(bound) +
                       " interleavings; exploration stopped";
      return report;
    }
    ScheduleScript script = base;
    script.schedule = run_length(prefix);
    const RunReport r =
        run_script(script, {.check = true, .record_enabled = true});
    ++report.interleavings;

    std::vector<ThreadId> choices;
    for (const auto& s : r.steps) {
      choices.push_back(s.thread);
      report.sites_seen.insert(s.site);
      report.kinds_seen[static_cast<std::size_t>(site_kind(s.site))] = true;
    }
    report.max_restarts = std::max(report.max_restarts, r.restarts());
    report.contains_lock_acquisitions +=
        r.contains_lock_acquisitions + r.stats.contains_lock_acquisitions;
    if (!r.ok()) {
      if (report.failures++ == 0) {
        script.schedule = run_length(choices);
        report.first_failure = script;
        report.failure_detail = format_report(r);
      }
    }

    bool advanced = false;
    for (std::size_t d = choices.size(); d-- > 0;) {
      const std::uint32_t chosen = std::uint32_t{1} << (choices[d] - 1);
      const std::uint32_t later = r.enabled[d] & ~((chosen << 1) - 1);
      if (later == 0) continue;
      prefix.assign(choices.begin(), choices.begin() + static_cast<long>(d));
      prefix.push_back(static_cast<ThreadId>(std::countr_zero(later) + 1));
      advanced = true;
      break;
    }
    if (!advanced) break;
  }
  return report;
}

}  // namespace cobst
