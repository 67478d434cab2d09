#ifndef COBST_NODE_HPP
#define COBST_NODE_HPP

#include <atomic>
#include <cassert>
#include <cstdint>

#include "cobst/cond_rw_lock.hpp"
#include "cobst/key.hpp"

namespace cobst {

enum class NodeState : std::uint8_t { Data, Routing };

enum class Side : std::uint8_t { Left, Right };

[[nodiscard]] constexpr Side opposite(Side s) noexcept {
  return s == Side::Left ? Side::Right : Side::Left;
}

/// Which child slot of a node keyed `parent` a key `k` belongs under.
[[nodiscard]] constexpr Side side_of(Key k, Key parent) noexcept {
  return k < parent ? Side::Left : Side::Right;
}

/// Stable node identity for traces and the unlinked-node registry.
/// 0 means "no node"; ids are only assigned by instrumented trees.
using NodeId = std::uint64_t;
inline constexpr NodeId kNoNode = 0;

/// One tree node. `val` never changes; every other field is read without
/// locks by traversals and written only under the corresponding lock:
///   left/right  - left_lock/right_lock
///   state       - state_lock
///   deleted     - state_lock (write mode)
struct Node {
  Node(Key key, NodeState initial, NodeId node_id = kNoNode) noexcept
      : val(key), state(initial), id(node_id) {}

  Node(const Node&) = delete;
  Node& operator=(const Node&) = delete;

  [[nodiscard]] std::atomic<Node*>& child(Side s) noexcept {
    return s == Side::Left ? left : right;
  }
  [[nodiscard]] const std::atomic<Node*>& child(Side s) const noexcept {
    return s == Side::Left ? left : right;
  }
  [[nodiscard]] CondRwLock& edge_lock(Side s) noexcept {
    return s == Side::Left ? left_lock : right_lock;
  }

  [[nodiscard]] Node* load_child(Side s) const noexcept {
    return child(s).load(std::memory_order_acquire);
  }
  void store_child(Side s, Node* n) noexcept {
    child(s).store(n, std::memory_order_release);
  }
  [[nodiscard]] NodeState load_state() const noexcept {
    return state.load(std::memory_order_acquire);
  }
  [[nodiscard]] bool is_deleted() const noexcept {
    return deleted.load(std::memory_order_acquire);
  }

  /// Logical deletion. Happens at most once per node.
  void mark_deleted() noexcept {
    [[maybe_unused]] const bool was =
        deleted.exchange(true, std::memory_order_acq_rel);
    assert(!was && "node logically deleted twice");
  }

  const Key val;
  std::atomic<Node*> left{nullptr};
  std::atomic<Node*> right{nullptr};
  std::atomic<NodeState> state;
  std::atomic<bool> deleted{false};
  CondRwLock state_lock;
  CondRwLock left_lock;
  CondRwLock right_lock;
  const NodeId id;
};

}  // namespace cobst

#endif  // COBST_NODE_HPP
