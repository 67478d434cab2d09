#include "cobst/reclamation.hpp"

#include <cassert>
#include <stdexcept>

namespace cobst {

std::uint64_t EpochDomain::State::next_uid() noexcept {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}

namespace {

/// Per-thread table of claimed slots, one per live domain the thread has
/// touched. Slots are handed back when the thread exits.
class ThreadSlots {
 public:
  ~ThreadSlots() {
    for (auto& h : handles_)
      if (auto state = h.state.lock()) state->release_slot(*h.slot);
  }

  EpochDomain::Slot& lookup(const std::shared_ptr<EpochDomain::State>& state) {
    for (auto& h : handles_)
      if (h.uid == state->uid) return *h.slot;
    return claim(state);
  }

 private:
  struct Handle {
    std::weak_ptr<EpochDomain::State> state;
    std::uint64_t uid;
    EpochDomain::Slot* slot;
  };

  EpochDomain::Slot& claim(const std::shared_ptr<EpochDomain::State>& state) {
    std::erase_if(handles_, [](const Handle& h) { return h.state.expired(); });
    for (auto& slot : state->slots) {
      bool expected = false;
      if (slot.in_use.compare_exchange_strong(expected, true,
                                              std::memory_order_acq_rel)) {
        slot.retires_since_scan = 0;
        handles_.push_back({state, state->uid, &slot});
        return slot;
      }
    }
    throw std::runtime_error("EpochDomain: more than " +
                             std::to_string(EpochDomain::kMaxThreads) +
                             " concurrent threads");
  }

  std::vector<Handle> handles_;
};

thread_local ThreadSlots tl_slots;

constexpr unsigned kScanEvery = 64;

}  // namespace

EpochDomain::EpochDomain(ReclaimMode mode)
    : state_(std::make_shared<State>(mode)) {}

EpochDomain::~EpochDomain() {
  // Exiting threads may be handing their slots back concurrently.
  std::lock_guard lock(state_->orphan_mutex);
  for (auto& slot : state_->slots) state_->drain(slot.retired);
  state_->drain(state_->orphans);
}

EpochDomain::Guard EpochDomain::pin() {
  Slot& slot = tl_slots.lookup(state_);
  assert(slot.epoch.load(std::memory_order_relaxed) == kIdle &&
         "EpochDomain::pin is not reentrant");
  // exchange: full barrier between the announcement and the reads that
  // follow it.
  slot.epoch.exchange(state_->global_epoch.load(std::memory_order_acquire),
                      std::memory_order_seq_cst);
  return Guard(slot);
}

void EpochDomain::retire(Guard& guard, Node* node) {
  assert(node->is_deleted() && "retiring a node that was not deleted");
  Slot& slot = guard.slot();
  slot.retired.emplace_back(
      node, state_->global_epoch.load(std::memory_order_acquire));
  if (state_->mode == ReclaimMode::Never) return;
  if (++slot.retires_since_scan >= kScanEvery) {
    slot.retires_since_scan = 0;
    state_->try_advance();
    state_->collect(slot);
  }
}

void EpochDomain::quiesce() {
  for (auto& slot : state_->slots) {
    assert(slot.epoch.load(std::memory_order_acquire) == kIdle &&
           "quiesce() with an operation in flight");
    state_->drain(slot.retired);
  }
  std::lock_guard lock(state_->orphan_mutex);
  state_->drain(state_->orphans);
}

ReclaimMode EpochDomain::mode() const noexcept { return state_->mode; }

std::uint64_t EpochDomain::reclaimed() const noexcept {
  return state_->reclaimed.load(std::memory_order_relaxed);
}

std::uint64_t EpochDomain::epoch() const noexcept {
  return state_->global_epoch.load(std::memory_order_acquire);
}

std::size_t EpochDomain::pending() const {
  std::size_t n = 0;
  for (const auto& slot : state_->slots) n += slot.retired.size();
  std::lock_guard lock(state_->orphan_mutex);
  return n + state_->orphans.size();
}

SetStats EpochDomain::stats() const {
  std::lock_guard lock(state_->orphan_mutex);
  SetStats s = state_->exited;
  for (const auto& slot : state_->slots) {
    if (!slot.in_use.load(std::memory_order_acquire)) continue;
    s.restarts += slot.restarts.load(std::memory_order_relaxed);
    s.lock_acquisitions += slot.lock_acquisitions.load(std::memory_order_relaxed);
    s.completed_ops += slot.completed_ops.load(std::memory_order_relaxed);
    s.contains_lock_acquisitions +=
        slot.contains_lock_acquisitions.load(std::memory_order_relaxed);
  }
  return s;
}

void EpochDomain::State::try_advance() {
  const std::uint64_t current = global_epoch.load(std::memory_order_acquire);
  for (const auto& slot : slots) {
    if (!slot.in_use.load(std::memory_order_acquire)) continue;
    const std::uint64_t e = slot.epoch.load(std::memory_order_acquire);
    if (e != kIdle && e != current) return;
  }
  std::uint64_t expected = current;
  global_epoch.compare_exchange_strong(expected, current + 1,
                                       std::memory_order_acq_rel);

  std::unique_lock lock(orphan_mutex, std::try_to_lock);
  if (lock.owns_lock() && !orphans.empty()) {
    const std::uint64_t now = global_epoch.load(std::memory_order_acquire);
    std::erase_if(orphans, [&](const auto& entry) {
      if (entry.second + 2 > now) return false;
      free_node(entry.first);
      return true;
    });
  }
}

void EpochDomain::State::collect(Slot& slot) {
  const std::uint64_t now = global_epoch.load(std::memory_order_acquire);
  std::erase_if(slot.retired, [&](const auto& entry) {
    if (entry.second + 2 > now) return false;
    free_node(entry.first);
    return true;
  });
}

void EpochDomain::State::release_slot(Slot& slot) {
  std::lock_guard lock(orphan_mutex);
  orphans.insert(orphans.end(), slot.retired.begin(), slot.retired.end());
  slot.retired.clear();
  exited.restarts += slot.restarts.load(std::memory_order_relaxed);
  exited.lock_acquisitions +=
      slot.lock_acquisitions.load(std::memory_order_relaxed);
  exited.completed_ops += slot.completed_ops.load(std::memory_order_relaxed);
  exited.contains_lock_acquisitions +=
      slot.contains_lock_acquisitions.load(std::memory_order_relaxed);
  slot.restarts.store(0, std::memory_order_relaxed);
  slot.lock_acquisitions.store(0, std::memory_order_relaxed);
  slot.completed_ops.store(0, std::memory_order_relaxed);
  slot.contains_lock_acquisitions.store(0, std::memory_order_relaxed);
  slot.epoch.store(kIdle, std::memory_order_release);
  slot.in_use.store(false, std::memory_order_release);
}

void EpochDomain::State::free_node(Node* n) noexcept {
  delete n;
  reclaimed.fetch_add(1, std::memory_order_relaxed);
}

void EpochDomain::State::drain(
    std::vector<std::pair<Node*, std::uint64_t>>& list) {
  for (auto& entry : list) free_node(entry.first);
  list.clear();
}

}  // namespace cobst
