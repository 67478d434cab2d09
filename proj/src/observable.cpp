#include "cobst/observable.hpp"

#include <optional>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace cobst {

const char* to_string(ObservableViolation::Kind k) noexcept {
  switch (k) {
    case ObservableViolation::Kind::MalformedTrace:
      return "MalformedTrace";
    case ObservableViolation::Kind::NotATree:
      return "NotATree";
    case ObservableViolation::Kind::ValueProperty:
      return "ValueProperty";
    case ObservableViolation::Kind::RoutingArity:
      return "RoutingArity";
    case ObservableViolation::Kind::Resurrected:
      return "Resurrected";
  }
  return "?";
}

bool ObservableReport::has(ObservableViolation::Kind k) const noexcept {
  for (const auto& v : violations)
    if (v.kind == k) return true;
  return false;
}

std::string ObservableReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations)
    os << cobst::to_string(v.kind) << " after event " << v.event_index
       << " (node #" << v.node << "): " << v.detail << '\n';
  return os.str();
}

namespace {

struct ModelNode {
  Key key;
  NodeState state;
  NodeId left = kNoNode;
  NodeId right = kNoNode;
};

class Model {
 public:
  explicit Model(NodeId root) : root_(root) {}

  std::optional<std::string> apply(const StructuralEvent& e) {
    switch (e.kind) {
      case StructuralEvent::Kind::Create:
        if (!nodes_.emplace(e.node, ModelNode{e.key, e.state}).second)
          return "node #" + std::to_string(e.node) + " created twice";
        return std::nullopt;
      case StructuralEvent::Kind::SetChild: {
        auto* n = find(e.node);
        if (n == nullptr) return unknown(e.node);
        if (e.child != kNoNode && find(e.child) == nullptr)
          return unknown(e.child);
        (e.side == Side::Left ? n->left : n->right) = e.child;
        return std::nullopt;
      }
      case StructuralEvent::Kind::SetState: {
        auto* n = find(e.node);
        if (n == nullptr) return unknown(e.node);
        n->state = e.state;
        return std::nullopt;
      }
      case StructuralEvent::Kind::MarkDeleted:
        if (find(e.node) == nullptr) return unknown(e.node);
        return std::nullopt;
    }
    return std::nullopt;
  }

  /// Checks the reachable graph; returns the reachable set.
  std::unordered_set<NodeId> check(std::size_t index,
                                   std::vector<ObservableViolation>& out) {
    std::unordered_set<NodeId> reachable;
    if (find(root_) == nullptr) return reachable;

    struct Frame {
      NodeId id;
      std::optional<Key> lo, hi;
    };
    std::vector<Frame> stack{{root_, {}, {}}};
    while (!stack.empty()) {
      const Frame f = stack.back();
      stack.pop_back();
      if (!reachable.insert(f.id).second) {
        out.push_back({ObservableViolation::Kind::NotATree, index, f.id,
                       "node reachable along two paths"});
        continue;
      }
      const ModelNode& n = nodes_.at(f.id);
      if ((f.lo && n.key <= *f.lo) || (f.hi && n.key >= *f.hi))
        out.push_back({ObservableViolation::Kind::ValueProperty, index, f.id,
                       "key " + std::to_string(n.key) +
                           " violates the value property"});
      if (n.state == NodeState::Routing &&
          (n.left == kNoNode || n.right == kNoNode))
        out.push_back({ObservableViolation::Kind::RoutingArity, index, f.id,
                       "routing node " + std::to_string(n.key) +
                           " has fewer than two children"});
      if (n.right != kNoNode) stack.push_back({n.right, n.key, f.hi});
      if (n.left != kNoNode) stack.push_back({n.left, f.lo, n.key});
    }
    return reachable;
  }

 private:
  ModelNode* find(NodeId id) {
    auto it = nodes_.find(id);
    return it == nodes_.end() ? nullptr : &it->second;
  }
  static std::string unknown(NodeId id) {
    return "event refers to unknown node #" + std::to_string(id);
  }

  NodeId root_;
  std::unordered_map<NodeId, ModelNode> nodes_;
};

}  // namespace

ObservableReport check_observable_correctness(const StructuralTrace& trace) {
  ObservableReport report;
  Model model(trace.root);
  std::unordered_set<NodeId> previously_reachable;
  std::unordered_set<NodeId> removed;
  bool root_seen = false;

  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    const StructuralEvent& e = trace.events[i];
    report.events_checked = i + 1;
    if (auto err = model.apply(e)) {
      report.violations.push_back(
          {ObservableViolation::Kind::MalformedTrace, i, e.node, *err});
      return report;
    }
    if (e.kind == StructuralEvent::Kind::Create && e.node == trace.root)
      root_seen = true;
    if (!root_seen) continue;

    std::vector<ObservableViolation> found;
    std::unordered_set<NodeId> reachable = model.check(i, found);
    for (NodeId id : previously_reachable)
      if (!reachable.count(id)) removed.insert(id);
    for (NodeId id : reachable)
      if (removed.count(id))
        found.push_back({ObservableViolation::Kind::Resurrected, i, id,
                         "node #" + std::to_string(id) +
                             " was removed earlier and is reachable again"});
    if (!found.empty()) {
      report.violations = std::move(found);
      return report;
    }
    previously_reachable = std::move(reachable);
  }
  if (!root_seen && !trace.events.empty())
    report.violations.push_back({ObservableViolation::Kind::MalformedTrace,
                                 trace.events.size() - 1, trace.root,
                                 "trace never creates its root"});
  return report;
}

}  // namespace cobst
