#ifndef COBST_OBSERVABLE_HPP
#define COBST_OBSERVABLE_HPP

/// \file
/// Replays a structural trace on a model of the node graph and checks,
/// after every event, that the nodes reachable from the root form a BST
/// (tree shape, value property, ROUTING arity two) and that no node that
/// was reachable and later became unreachable is ever reachable again.

#include <cstddef>
#include <string>
#include <vector>

#include "cobst/structural_trace.hpp"

namespace cobst {

struct ObservableViolation {
  enum class Kind : std::uint8_t {
    MalformedTrace,  // unknown node, duplicate creation, missing root
    NotATree,
    ValueProperty,
    RoutingArity,
    Resurrected,
  };

  Kind kind;
  std::size_t event_index;  // violation observed after this event
  NodeId node;
  std::string detail;
};

[[nodiscard]] const char* to_string(ObservableViolation::Kind k) noexcept;

struct ObservableReport {
  /// Violations of the first failing prefix; empty when the trace is clean.
  std::vector<ObservableViolation> violations;
  std::size_t events_checked = 0;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
  [[nodiscard]] bool has(ObservableViolation::Kind k) const noexcept;
  [[nodiscard]] std::string to_string() const;
};

[[nodiscard]] ObservableReport check_observable_correctness(
    const StructuralTrace& trace);

}  // namespace cobst

#endif  // COBST_OBSERVABLE_HPP
