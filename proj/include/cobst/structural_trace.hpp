#ifndef COBST_STRUCTURAL_TRACE_HPP
#define COBST_STRUCTURAL_TRACE_HPP

#include <iosfwd>
#include <vector>

#include "cobst/key.hpp"
#include "cobst/node.hpp"

namespace cobst {

/// A committed write to the tree shape, in global order.
struct StructuralEvent {
  enum class Kind : std::uint8_t { Create, SetChild, SetState, MarkDeleted };

  Kind kind{};
  NodeId node = kNoNode;
  Key key = 0;                         // Create
  NodeState state = NodeState::Data;   // Create, SetState
  Side side = Side::Left;              // SetChild
  NodeId child = kNoNode;              // SetChild; kNoNode nulls the edge

  static StructuralEvent create(NodeId n, Key k, NodeState s) {
    return {Kind::Create, n, k, s, Side::Left, kNoNode};
  }
  static StructuralEvent set_child(NodeId parent, Side s, NodeId c) {
    return {Kind::SetChild, parent, 0, NodeState::Data, s, c};
  }
  static StructuralEvent set_state(NodeId n, NodeState s) {
    return {Kind::SetState, n, 0, s, Side::Left, kNoNode};
  }
  static StructuralEvent mark_deleted(NodeId n) {
    return {Kind::MarkDeleted, n, 0, NodeState::Data, Side::Left, kNoNode};
  }

  friend bool operator==(const StructuralEvent&,
                         const StructuralEvent&) = default;
};

std::ostream& operator<<(std::ostream& os, const StructuralEvent& e);

struct StructuralTrace {
  NodeId root = kNoNode;
  std::vector<StructuralEvent> events;

  friend bool operator==(const StructuralTrace&,
                         const StructuralTrace&) = default;
};

/// Create + SetChild events reproducing the subtree under `root`, preorder.
[[nodiscard]] StructuralTrace snapshot_trace(const Node* root);

}  // namespace cobst

#endif  // COBST_STRUCTURAL_TRACE_HPP
