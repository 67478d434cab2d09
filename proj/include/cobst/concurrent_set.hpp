#ifndef COBST_CONCURRENT_SET_HPP
#define COBST_CONCURRENT_SET_HPP

/// \file
/// Concurrency-optimal partially-external BST.
///
/// contains() is a single lock-free descent. insert() and remove() descend
/// the same way, decide what to do from the values they read, then take
/// exactly the per-field locks that protect those values, using conditional
/// acquisition to validate them. A failed validation releases everything
/// and restarts from the root; a merely busy lock is retried in place for a
/// bounded number of attempts first.
///
/// Locks are taken child-first: an edge lock counts as belonging to the
/// child's level and a state lock to the node's own level, and within one
/// attempt the level never increases. Removal is logical (the deleted mark,
/// set under the node's state write lock) before physical (the edge swing).

#include <array>
#include <cassert>
#include <cstdint>
#include <memory>
#include <string>

#include "cobst/cond_rw_lock.hpp"
#include "cobst/instrument.hpp"
#include "cobst/key.hpp"
#include "cobst/node.hpp"
#include "cobst/node_locks.hpp"
#include "cobst/reclamation.hpp"
#include "cobst/tree_core.hpp"

namespace cobst {

struct OpOutcome {
  bool result = false;
  std::uint32_t restarts = 0;
};

template <typename Instrument = NullInstrument>
class BasicConcurrentSet {
 public:
  explicit BasicConcurrentSet(ReclaimMode mode = ReclaimMode::Epoch,
                              Instrument instrument = Instrument{})
      : instrument_(std::move(instrument)),
        domain_(mode),
        root_(new Node(kPlusInf, NodeState::Data, next_id())) {
    if constexpr (Instrument::kTracksNodes)
      instrument_.on_write(
          StructuralEvent::create(root_->id, root_->val, NodeState::Data));
  }

  ~BasicConcurrentSet() { destroy_subtree(root_); }

  BasicConcurrentSet(const BasicConcurrentSet&) = delete;
  BasicConcurrentSet& operator=(const BasicConcurrentSet&) = delete;

  bool contains(Key v) { return contains_ex(v).result; }
  bool insert(Key v) { return insert_ex(v).result; }
  bool remove(Key v) { return remove_ex(v).result; }

  OpOutcome contains_ex(Key v);
  OpOutcome insert_ex(Key v);
  OpOutcome remove_ex(Key v);

  [[nodiscard]] Node* root() const noexcept { return root_; }
  [[nodiscard]] Instrument& instrument() noexcept { return instrument_; }
  [[nodiscard]] const Instrument& instrument() const noexcept {
    return instrument_;
  }
  [[nodiscard]] EpochDomain& reclamation() noexcept { return domain_; }
  [[nodiscard]] SetStats stats() const { return domain_.stats(); }

  /// Quiescent-state checks. Meaningless while operations are running.
  [[nodiscard]] ValidationReport validate() const {
    if constexpr (Instrument::kTracksNodes)
      return validate_structure(root_, &instrument_.unlinked());
    else
      return validate_structure(root_);
  }
  [[nodiscard]] std::vector<Key> keys() const { return collect_keys(root_); }
  [[nodiscard]] std::string dump() const { return dump_tree(root_); }

 private:
  using Slot = EpochDomain::Slot;

  // Levels for the child-before-parent lock order check.
  enum Level : int { kGprev = 0, kPrev = 1, kCurr = 2, kChild = 3 };

  /// Locks held by one attempt; released in reverse order on scope exit.
  class LockSet {
   public:
    explicit LockSet(Instrument& inst) noexcept : inst_(inst) {}
    LockSet(const LockSet&) = delete;
    LockSet& operator=(const LockSet&) = delete;
    ~LockSet() { release(); }

    void add(CondRwLock& lock, LockMode mode, [[maybe_unused]] int level) {
      assert(size_ < held_.size());
      assert(level <= last_level_ && "lock taken out of child-first order");
#ifndef NDEBUG
      last_level_ = level;
#endif
      held_[size_++] = {&lock, mode};
    }

    void release() noexcept {
      while (size_ > 0) {
        --size_;
        held_[size_].lock->unlock(held_[size_].mode);
        inst_.on_unlocked(*held_[size_].lock, held_[size_].mode);
      }
    }

   private:
    struct Held {
      CondRwLock* lock;
      LockMode mode;
    };
    Instrument& inst_;
    std::array<Held, 6> held_{};
    std::size_t size_ = 0;
#ifndef NDEBUG
    int last_level_ = kChild + 1;
#else
    static constexpr int last_level_ = kChild + 1;
#endif
  };

  NodeId next_id() noexcept {
    if constexpr (Instrument::kTracksNodes)
      return next_id_.fetch_add(1, std::memory_order_relaxed);
    else
      return kNoNode;
  }

  /// One conditional lock acquisition with the contention policy applied.
  /// On Acquired the lock is recorded in `locks`.
  template <typename Attempt>
  bool acquire(Slot& slot, LockSet& locks, Site site, CondRwLock& lock,
               LockMode mode, int level, Attempt&& attempt) {
    Backoff backoff;
    for (;;) {
      instrument_.access(site);
      const LockOutcome outcome = attempt();
      if (outcome == LockOutcome::Acquired) {
        Slot::bump(slot.lock_acquisitions);
        locks.add(lock, mode, level);
        instrument_.on_locked(lock, mode);
        return true;
      }
      if (outcome == LockOutcome::ConditionViolated) {
        instrument_.on_condition_violated(site);
        return false;
      }
      if constexpr (Instrument::kBlockOnContention) {
        if (!instrument_.on_contended(lock, mode)) return false;
      } else if (!backoff.pause()) {
        return false;
      }
    }
  }

  Node* read_fresh_child(Node& n, Side s, Site site) {
    instrument_.access(site);
    return n.load_child(s);
  }

  void write_state(Node& n, NodeState s, Site site) {
    instrument_.access(site);
    n.state.store(s, std::memory_order_release);
    if constexpr (Instrument::kTracksNodes)
      instrument_.on_write(StructuralEvent::set_state(n.id, s));
  }

  void write_child(Node& parent, Side s, Node* child, Site site) {
    instrument_.access(site);
    parent.store_child(s, child);
    if constexpr (Instrument::kTracksNodes)
      instrument_.on_write(StructuralEvent::set_child(
          parent.id, s, child != nullptr ? child->id : kNoNode));
  }

  void mark_deleted(Node& n, Site site) {
    instrument_.access(site);
    n.mark_deleted();
    if constexpr (Instrument::kTracksNodes)
      instrument_.on_write(StructuralEvent::mark_deleted(n.id));
  }

  void unlinked(EpochDomain::Guard& guard, Node* n) {
    if constexpr (Instrument::kTracksNodes) instrument_.on_unlink(*n);
    domain_.retire(guard, n);
  }

  void note_restart(Slot& slot, OpOutcome& out) {
    ++out.restarts;
    Slot::bump(slot.restarts);
    instrument_.on_restart();
    if constexpr (!Instrument::kBlockOnContention) restart_pause(out.restarts);
  }

  enum class Step : std::uint8_t { Done, Restart };

  Step remove_attempt(EpochDomain::Guard& guard, Key v, bool& result);

  Instrument instrument_;
  std::atomic<NodeId> next_id_{1};
  EpochDomain domain_;
  Node* root_;
};

using ConcurrentSet = BasicConcurrentSet<NullInstrument>;

// ---------------------------------------------------------------------------

template <typename Instrument>
OpOutcome BasicConcurrentSet<Instrument>::contains_ex(Key v) {
  require_client_key(v);
  auto guard = domain_.pin();
  Slot& slot = guard.slot();
  const std::uint64_t locks_before =
      slot.lock_acquisitions.load(std::memory_order_relaxed);

  instrument_.on_attempt_start();
  TraversalResult t = traverse(root_, v, instrument_);
  const bool found =
      t.curr.node != nullptr &&
      read_state(t.curr, instrument_, Site::ContainsReadState) ==
          NodeState::Data;

  Slot::bump(slot.contains_lock_acquisitions,
             slot.lock_acquisitions.load(std::memory_order_relaxed) -
                 locks_before);
  Slot::bump(slot.completed_ops);
  return {found, 0};
}

template <typename Instrument>
OpOutcome BasicConcurrentSet<Instrument>::insert_ex(Key v) {
  require_client_key(v);
  auto guard = domain_.pin();
  Slot& slot = guard.slot();
  OpOutcome out;
  // Allocated at most once per operation and reused across restarts.
  std::unique_ptr<Node> fresh;

  for (;;) {
    instrument_.on_attempt_start();
    TraversalResult t = traverse(root_, v, instrument_);
    LockSet locks(instrument_);

    if (Node* curr = t.curr.node) {
      if (read_state(t.curr, instrument_, Site::InsertReadState) ==
          NodeState::Data) {
        out.result = false;
        break;
      }
      // ROUTING node with our key: flip it back to DATA.
      if (!acquire(slot, locks, Site::InsertLockStateRouting, curr->state_lock,
                   LockMode::Write, kCurr, [&] {
                     return try_lock_state(*curr, LockMode::Write,
                                           NodeState::Routing);
                   })) {
        locks.release();
        note_restart(slot, out);
        continue;
      }
      write_state(*curr, NodeState::Data, Site::InsertWriteState);
      out.result = true;
      break;
    }

    Node* prev = t.prev.node;
    const Side side = side_of(v, prev->val);
    if (fresh == nullptr) {
      instrument_.access(Site::InsertCreateNode);
      fresh = std::make_unique<Node>(v, NodeState::Data, next_id());
      if constexpr (Instrument::kTracksNodes)
        instrument_.on_write(
            StructuralEvent::create(fresh->id, v, NodeState::Data));
    }

    if (!acquire(slot, locks, Site::InsertLockEdgeNull, prev->edge_lock(side),
                 LockMode::Write, kCurr,
                 [&] { return try_lock_edge_ref(*prev, side, nullptr); })) {
      locks.release();
      note_restart(slot, out);
      continue;
    }
    // Keeps out removals of prev, which write-lock its state.
    if (!acquire(slot, locks, Site::InsertReadLockPrevState, prev->state_lock,
                 LockMode::Read, kPrev,
                 [&] { return prev->state_lock.try_read_lock(); })) {
      locks.release();
      note_restart(slot, out);
      continue;
    }
    instrument_.access(Site::InsertReadPrevDeleted);
    if (prev->is_deleted()) {
      instrument_.on_condition_violated(Site::InsertReadPrevDeleted);
      locks.release();
      note_restart(slot, out);
      continue;
    }
    write_child(*prev, side, fresh.get(), Site::InsertLink);
    (void)fresh.release();
    out.result = true;
    break;
  }

  Slot::bump(slot.completed_ops);
  return out;
}

template <typename Instrument>
OpOutcome BasicConcurrentSet<Instrument>::remove_ex(Key v) {
  require_client_key(v);
  auto guard = domain_.pin();
  Slot& slot = guard.slot();
  OpOutcome out;
  while (remove_attempt(guard, v, out.result) == Step::Restart)
    note_restart(slot, out);
  Slot::bump(slot.completed_ops);
  return out;
}

template <typename Instrument>
auto BasicConcurrentSet<Instrument>::remove_attempt(EpochDomain::Guard& guard,
                                                    Key v, bool& result)
    -> Step {
  Slot& slot = guard.slot();
  instrument_.on_attempt_start();
  TraversalResult t = traverse(root_, v, instrument_);
  LockSet locks(instrument_);

  Node* curr = t.curr.node;
  if (curr == nullptr || read_state(t.curr, instrument_,
                                    Site::DeleteReadState) != NodeState::Data) {
    result = false;
    return Step::Done;
  }
  Node* prev = t.prev.node;
  Node* left = read_child(t.curr, Side::Left, instrument_, Site::DeleteReadLeft);
  Node* right =
      read_child(t.curr, Side::Right, instrument_, Site::DeleteReadRight);

  if (left != nullptr && right != nullptr) {
    // Two children: the node stays as a ROUTING node.
    if (!acquire(slot, locks, Site::TwoChildLockState, curr->state_lock,
                 LockMode::Write, kCurr, [&] {
                   return try_lock_state(*curr, LockMode::Write,
                                         NodeState::Data);
                 }))
      return Step::Restart;
    const bool has_left =
        read_fresh_child(*curr, Side::Left, Site::TwoChildReadLeft) != nullptr;
    const bool has_right = read_fresh_child(*curr, Side::Right,
                                            Site::TwoChildReadRight) != nullptr;
    if (!has_left || !has_right) {
      instrument_.on_condition_violated(Site::TwoChildReadRight);
      return Step::Restart;
    }
    write_state(*curr, NodeState::Routing, Site::TwoChildWriteState);
    result = true;
    return Step::Done;
  }

  if (left != nullptr || right != nullptr) {
    // One child: splice it into prev.
    Node* child = left != nullptr ? left : right;
    if (!acquire(slot, locks, Site::OneChildLockCurrEdge,
                 curr->edge_lock(edge_side(*curr, *child)), LockMode::Write,
                 kChild,
                 [&] { return try_lock_edge(*curr, *child, EdgeMatch::Ref); }))
      return Step::Restart;
    const Side curr_side = edge_side(*prev, *curr);
    if (!acquire(slot, locks, Site::OneChildLockPrevEdge,
                 prev->edge_lock(curr_side), LockMode::Write, kCurr,
                 [&] { return try_lock_edge(*prev, *curr, EdgeMatch::Ref); }))
      return Step::Restart;
    if (!acquire(slot, locks, Site::OneChildLockState, curr->state_lock,
                 LockMode::Write, kCurr, [&] {
                   return try_lock_state(*curr, LockMode::Write,
                                         NodeState::Data);
                 }))
      return Step::Restart;
    const bool has_left =
        read_fresh_child(*curr, Side::Left, Site::OneChildReadLeft) != nullptr;
    const bool has_right = read_fresh_child(*curr, Side::Right,
                                            Site::OneChildReadRight) != nullptr;
    if (has_left == has_right) {
      instrument_.on_condition_violated(Site::OneChildReadRight);
      return Step::Restart;
    }
    mark_deleted(*curr, Site::OneChildMarkDeleted);
    write_child(*prev, curr_side, child, Site::OneChildUnlink);
    locks.release();
    unlinked(guard, curr);
    result = true;
    return Step::Done;
  }

  // Leaf. The parent's state picks between the two leaf cases; a ROUTING
  // parent also needs its other child, read before any lock is taken.
  const NodeState prev_state =
      read_state(t.prev, instrument_, Site::DeleteReadPrevState);
  const Side side = side_of(v, prev->val);
  Node* sibling = nullptr;
  if (prev_state == NodeState::Routing) {
    sibling = read_child(t.prev, opposite(side), instrument_,
                         Site::RoutingParentReadSibling);
  }

  if (!acquire(slot, locks, Site::LeafLockPrevEdgeVal, prev->edge_lock(side),
               LockMode::Write, kCurr,
               [&] { return try_lock_edge_val(*prev, side, v); }))
    return Step::Restart;
  // Under the by-value edge lock prev's child is some node keyed v, not
  // necessarily the one the traversal saw.
  curr = read_fresh_child(*prev, side, Site::LeafReadCurr);
  assert(curr != nullptr && curr->val == v);
  if (!acquire(slot, locks, Site::LeafLockState, curr->state_lock,
               LockMode::Write, kCurr, [&] {
                 return try_lock_state(*curr, LockMode::Write,
                                       NodeState::Data);
               }))
    return Step::Restart;
  const bool curr_has_left =
      read_fresh_child(*curr, Side::Left, Site::LeafReadLeft) != nullptr;
  const bool curr_has_right =
      read_fresh_child(*curr, Side::Right, Site::LeafReadRight) != nullptr;
  if (curr_has_left || curr_has_right) {
    instrument_.on_condition_violated(Site::LeafReadRight);
    return Step::Restart;
  }

  if (prev_state == NodeState::Data) {
    if (!acquire(slot, locks, Site::DataParentReadLockState, prev->state_lock,
                 LockMode::Read, kPrev, [&] {
                   return try_lock_state(*prev, LockMode::Read,
                                         NodeState::Data);
                 }))
      return Step::Restart;
    mark_deleted(*curr, Site::DataParentMarkDeleted);
    write_child(*prev, side, nullptr, Site::DataParentUnlink);
    locks.release();
    unlinked(guard, curr);
    result = true;
    return Step::Done;
  }

  // ROUTING parent: prev goes too, its other child takes its place.
  Node* gprev = t.gprev.node;
  if (sibling == nullptr || gprev == nullptr) {
    // Only reachable from a stale snapshot; a linked ROUTING node always
    // has two children and is never the root.
    instrument_.on_condition_violated(Site::RoutingParentReadSibling);
    return Step::Restart;
  }
  if (!acquire(slot, locks, Site::RoutingParentLockSiblingEdge,
               prev->edge_lock(opposite(side)), LockMode::Write, kCurr,
               [&] { return try_lock_edge_ref(*prev, opposite(side), sibling); }))
    return Step::Restart;
  const Side prev_side = edge_side(*gprev, *prev);
  if (!acquire(slot, locks, Site::RoutingParentLockGprevEdge,
               gprev->edge_lock(prev_side), LockMode::Write, kPrev,
               [&] { return try_lock_edge(*gprev, *prev, EdgeMatch::Ref); }))
    return Step::Restart;
  if (!acquire(slot, locks, Site::RoutingParentLockState, prev->state_lock,
               LockMode::Write, kPrev, [&] {
                 return try_lock_state(*prev, LockMode::Write,
                                       NodeState::Routing);
               }))
    return Step::Restart;
  mark_deleted(*prev, Site::RoutingParentMarkPrevDeleted);
  mark_deleted(*curr, Site::RoutingParentMarkCurrDeleted);
  write_child(*gprev, prev_side, sibling, Site::RoutingParentUnlink);
  locks.release();
  unlinked(guard, prev);
  unlinked(guard, curr);
  result = true;
  return Step::Done;
}

}  // namespace cobst

#endif  // COBST_CONCURRENT_SET_HPP
