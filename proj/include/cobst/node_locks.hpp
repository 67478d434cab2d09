#ifndef COBST_NODE_LOCKS_HPP
#define COBST_NODE_LOCKS_HPP

/// \file
/// The conditional lock functions on a node. Each one checks its predicate,
/// takes the lock, and checks the predicate again; every predicate also
/// requires that the node is not logically deleted.

#include <cassert>

#include "cobst/cond_rw_lock.hpp"
#include "cobst/node.hpp"

namespace cobst {

enum class EdgeMatch : std::uint8_t { Ref, Val };

/// Write-lock the `side` edge of `node` if it still points to `expected`.
[[nodiscard]] inline LockOutcome try_lock_edge_ref(Node& node, Side side,
                                                   const Node* expected) {
  return try_lock_with_condition(node.edge_lock(side), LockMode::Write, [&] {
    return node.load_child(side) == expected && !node.is_deleted();
  });
}

/// Write-lock the `side` edge of `node` if it points to some node keyed
/// `expected`. The child may have been replaced by another node with the
/// same key.
[[nodiscard]] inline LockOutcome try_lock_edge_val(Node& node, Side side,
                                                   Key expected) {
  return try_lock_with_condition(node.edge_lock(side), LockMode::Write, [&] {
    const Node* child = node.load_child(side);
    return child != nullptr && child->val == expected && !node.is_deleted();
  });
}

/// Lock `node`'s state in `mode` if it equals `expected`.
[[nodiscard]] inline LockOutcome try_lock_state(Node& node, LockMode mode,
                                                NodeState expected) {
  return try_lock_with_condition(node.state_lock, mode, [&] {
    return node.load_state() == expected && !node.is_deleted();
  });
}

/// Side of `node` that `child` belongs under.
[[nodiscard]] inline Side edge_side(const Node& node, const Node& child) {
  assert(child.val != node.val && "a node cannot be its own child");
  return side_of(child.val, node.val);
}

/// Edge lock toward `child`, picking the left or right variant by key.
[[nodiscard]] inline LockOutcome try_lock_edge(Node& node, const Node& child,
                                               EdgeMatch by) {
  const Side side = edge_side(node, child);
  return by == EdgeMatch::Ref ? try_lock_edge_ref(node, side, &child)
                              : try_lock_edge_val(node, side, child.val);
}

}  // namespace cobst

#endif  // COBST_NODE_LOCKS_HPP
