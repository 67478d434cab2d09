#ifndef COBST_RECLAMATION_HPP
#define COBST_RECLAMATION_HPP

/// \file
/// Epoch-based deferred reclamation for unlinked tree nodes, and the
/// per-thread operation counters that ride on the same thread slots.
///
/// A thread pins the domain for the duration of one set operation. Retired
/// nodes are tagged with the global epoch at retirement and freed once the
/// epoch has advanced twice past it; the epoch only advances when every
/// pinned thread has observed the current value, so a node is never freed
/// while an operation that could have reached it is still running.

#include <array>
#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "cobst/node.hpp"

namespace cobst {

enum class ReclaimMode : std::uint8_t {
  Epoch,  // free after a grace period
  Never,  // keep everything until quiesce() or destruction
};

struct SetStats {
  std::uint64_t restarts = 0;
  std::uint64_t lock_acquisitions = 0;
  std::uint64_t completed_ops = 0;
  /// Lock acquisitions made while a contains() was running on that thread.
  std::uint64_t contains_lock_acquisitions = 0;
};

class EpochDomain {
 public:
  static constexpr std::size_t kMaxThreads = 512;

  struct alignas(64) Slot {
    std::atomic<bool> in_use{false};
    std::atomic<std::uint64_t> epoch{kIdle};
    std::vector<std::pair<Node*, std::uint64_t>> retired;  // owner-only
    unsigned retires_since_scan = 0;

    // Single writer (the owning thread); read by stats().
    std::atomic<std::uint64_t> restarts{0};
    std::atomic<std::uint64_t> lock_acquisitions{0};
    std::atomic<std::uint64_t> completed_ops{0};
    std::atomic<std::uint64_t> contains_lock_acquisitions{0};

    static void bump(std::atomic<std::uint64_t>& c,
                     std::uint64_t by = 1) noexcept {
      c.store(c.load(std::memory_order_relaxed) + by,
              std::memory_order_relaxed);
    }
  };

  static constexpr std::uint64_t kIdle = ~std::uint64_t{0};

  class Guard {
   public:
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;
    ~Guard() {
      slot_->epoch.store(kIdle, std::memory_order_release);
    }
    [[nodiscard]] Slot& slot() const noexcept { return *slot_; }

   private:
    friend class EpochDomain;
    explicit Guard(Slot& s) noexcept : slot_(&s) {}
    Slot* slot_;
  };

  explicit EpochDomain(ReclaimMode mode = ReclaimMode::Epoch);
  ~EpochDomain();

  EpochDomain(const EpochDomain&) = delete;
  EpochDomain& operator=(const EpochDomain&) = delete;

  /// Enter a read-side critical section on the calling thread. Not
  /// reentrant.
  [[nodiscard]] Guard pin();

  /// Hand an unlinked, logically deleted node over for deferred freeing.
  /// Must be called while pinned.
  void retire(Guard& guard, Node* node);

  /// Free everything retired so far. Requires that no thread is inside an
  /// operation on this domain.
  void quiesce();

  [[nodiscard]] ReclaimMode mode() const noexcept;
  [[nodiscard]] std::size_t pending() const;
  [[nodiscard]] std::uint64_t reclaimed() const noexcept;
  [[nodiscard]] std::uint64_t epoch() const noexcept;
  [[nodiscard]] SetStats stats() const;

  struct State;

 private:
  std::shared_ptr<State> state_;
};

struct EpochDomain::State {
  explicit State(ReclaimMode m) : mode(m) {}

  void try_advance();
  void collect(Slot& slot);
  void release_slot(Slot& slot);
  void free_node(Node* n) noexcept;
  void drain(std::vector<std::pair<Node*, std::uint64_t>>& list);

  const ReclaimMode mode;
  const std::uint64_t uid = next_uid();
  std::atomic<std::uint64_t> global_epoch{0};
  std::atomic<std::uint64_t> reclaimed{0};
  std::array<Slot, kMaxThreads> slots;

  // Retire lists and counters of threads that exited.
  mutable std::mutex orphan_mutex;
  std::vector<std::pair<Node*, std::uint64_t>> orphans;
  SetStats exited;

 private:
  static std::uint64_t next_uid() noexcept;
};

}  // namespace cobst

#endif  // COBST_RECLAMATION_HPP
