#include "cobst/tree_core.hpp"

#include <ostream>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace cobst {

const char* to_string(Violation::Kind k) noexcept {
  switch (k) {
    case Violation::Kind::NullRoot:
      return "NullRoot";
    case Violation::Kind::NotATree:
      return "NotATree";
    case Violation::Kind::ValueProperty:
      return "ValueProperty";
    case Violation::Kind::RoutingArity:
      return "RoutingArity";
    case Violation::Kind::DeletedReachable:
      return "DeletedReachable";
    case Violation::Kind::Resurrected:
      return "Resurrected";
  }
  return "?";
}

bool ValidationReport::has(Violation::Kind k) const noexcept {
  for (const auto& v : violations)
    if (v.kind == k) return true;
  return false;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations)
    os << cobst::to_string(v.kind) << " at key " << v.key << ": " << v.detail
       << '\n';
  return os.str();
}

namespace {

std::string key_text(Key k) { return k == kPlusInf ? "∞" : std::to_string(k); }

struct Frame {
  const Node* node;
  std::optional<Key> lo;  // exclusive
  std::optional<Key> hi;  // exclusive
};

}  // namespace

ValidationReport validate_structure(const Node* root,
                                    const UnlinkedRegistry* unlinked) {
  ValidationReport report;
  if (root == nullptr) {
    report.violations.push_back(
        {Violation::Kind::NullRoot, 0, "tree has no root"});
    return report;
  }

  std::unordered_set<const Node*> seen;
  std::vector<Frame> stack{{root, std::nullopt, std::nullopt}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const Node* n = f.node;
    if (!seen.insert(n).second) {
      report.violations.push_back(
          {Violation::Kind::NotATree, n->val, "node reachable twice"});
      continue;
    }
    ++report.reachable;

    if ((f.lo && n->val <= *f.lo) || (f.hi && n->val >= *f.hi)) {
      report.violations.push_back(
          {Violation::Kind::ValueProperty, n->val,
           "key outside (" + (f.lo ? key_text(*f.lo) : "-inf") + ", " +
               (f.hi ? key_text(*f.hi) : "+inf") + ")"});
    }

    const Node* left = n->load_child(Side::Left);
    const Node* right = n->load_child(Side::Right);
    if (n->load_state() == NodeState::Routing) {
      ++report.routing_nodes;
      if (left == nullptr || right == nullptr)
        report.violations.push_back({Violation::Kind::RoutingArity, n->val,
                                     "routing node with fewer than two "
                                     "children"});
    } else if (n != root) {
      ++report.data_nodes;
    }

    if (n->is_deleted())
      report.violations.push_back({Violation::Kind::DeletedReachable, n->val,
                                   "logically deleted node still linked"});
    if (unlinked != nullptr && n->id != kNoNode && unlinked->contains(n->id))
      report.violations.push_back(
          {Violation::Kind::Resurrected, n->val,
           "node id " + std::to_string(n->id) + " was unlinked earlier"});

    if (right != nullptr) stack.push_back({right, n->val, f.hi});
    if (left != nullptr) stack.push_back({left, f.lo, n->val});
  }
  return report;
}

namespace {

void dump_into(std::ostream& os, const Node* n) {
  if (n == nullptr) {
    os << '_';
    return;
  }
  os << '(' << key_text(n->val) << ' '
     << (n->load_state() == NodeState::Data ? 'D' : 'R') << ' ';
  dump_into(os, n->load_child(Side::Left));
  os << ' ';
  dump_into(os, n->load_child(Side::Right));
  os << ')';
}

}  // namespace

std::string dump_tree(const Node* root) {
  std::ostringstream os;
  dump_into(os, root);
  return os.str();
}

std::vector<Key> collect_keys(const Node* root) {
  std::vector<Key> keys;
  // In-order walk with an explicit stack; the tree is unbalanced.
  std::vector<const Node*> stack;
  const Node* n = root;
  while (n != nullptr || !stack.empty()) {
    while (n != nullptr) {
      stack.push_back(n);
      n = n->load_child(Side::Left);
    }
    n = stack.back();
    stack.pop_back();
    if (n != root && n->load_state() == NodeState::Data) keys.push_back(n->val);
    n = n->load_child(Side::Right);
  }
  return keys;
}

void destroy_subtree(Node* root) noexcept {
  std::vector<Node*> stack;
  if (root != nullptr) stack.push_back(root);
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (Node* l = n->load_child(Side::Left)) stack.push_back(l);
    if (Node* r = n->load_child(Side::Right)) stack.push_back(r);
    delete n;
  }
}

std::ostream& operator<<(std::ostream& os, const StructuralEvent& e) {
  switch (e.kind) {
    case StructuralEvent::Kind::Create:
      return os << "create #" << e.node << " key=" << key_text(e.key) << ' '
                << (e.state == NodeState::Data ? "DATA" : "ROUTING");
    case StructuralEvent::Kind::SetChild:
      return os << "child #" << e.node << '.'
                << (e.side == Side::Left ? "left" : "right") << " = "
                << (e.child == kNoNode ? std::string("null")
                                       : "#" + std::to_string(e.child));
    case StructuralEvent::Kind::SetState:
      return os << "state #" << e.node << " = "
                << (e.state == NodeState::Data ? "DATA" : "ROUTING");
    case StructuralEvent::Kind::MarkDeleted:
      return os << "deleted #" << e.node;
  }
  return os;
}

StructuralTrace snapshot_trace(const Node* root) {
  StructuralTrace trace;
  if (root == nullptr) return trace;
  trace.root = root->id;

  // All creations first, then edges bottom-up, so that every prefix of the
  // snapshot only ever links complete subtrees.
  std::vector<const Node*> preorder;
  std::vector<const Node*> stack{root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    preorder.push_back(n);
    trace.events.push_back(
        StructuralEvent::create(n->id, n->val, n->load_state()));
    if (const Node* r = n->load_child(Side::Right)) stack.push_back(r);
    if (const Node* l = n->load_child(Side::Left)) stack.push_back(l);
  }
  for (auto it = preorder.rbegin(); it != preorder.rend(); ++it) {
    for (Side s : {Side::Left, Side::Right}) {
      if (const Node* c = (*it)->load_child(s))
        trace.events.push_back(StructuralEvent::set_child((*it)->id, s, c->id));
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// SeqTree

SeqTree::SeqTree(bool track_unlinked)
    : root_(nullptr),
      unlinked_(track_unlinked ? std::make_unique<UnlinkedRegistry>()
                               : nullptr) {
  root_ = make_node(kPlusInf);
}

SeqTree::~SeqTree() { destroy_subtree(root_); }

Node* SeqTree::make_node(Key v) {
  return new Node(v, NodeState::Data, next_id_++);
}

void SeqTree::unlink(Node* n) {
  if (unlinked_) unlinked_->add(n->id);
  delete n;
}

bool SeqTree::contains(Key v) const {
  require_client_key(v);
  const TraversalResult t = traverse(v);
  return t.curr.node != nullptr &&
         t.curr.node->load_state() == NodeState::Data;
}

bool SeqTree::insert(Key v) {
  require_client_key(v);
  const TraversalResult t = traverse(v);
  if (Node* curr = t.curr.node) {
    if (curr->load_state() == NodeState::Data) return false;
    curr->state.store(NodeState::Data, std::memory_order_release);
    ++size_;
    return true;
  }
  Node* prev = t.prev.node;
  prev->store_child(side_of(v, prev->val), make_node(v));
  ++size_;
  return true;
}

bool SeqTree::remove(Key v) {
  require_client_key(v);
  const TraversalResult t = traverse(v);
  Node* curr = t.curr.node;
  if (curr == nullptr || curr->load_state() != NodeState::Data) return false;

  Node* prev = t.prev.node;
  Node* left = curr->load_child(Side::Left);
  Node* right = curr->load_child(Side::Right);
  const Side curr_side = side_of(curr->val, prev->val);

  if (left != nullptr && right != nullptr) {
    curr->state.store(NodeState::Routing, std::memory_order_release);
  } else if (left != nullptr || right != nullptr) {
    prev->store_child(curr_side, left != nullptr ? left : right);
    unlink(curr);
  } else if (prev->load_state() == NodeState::Data) {
    prev->store_child(curr_side, nullptr);
    unlink(curr);
  } else {
    // Routing parent: splice the sibling into the grandparent.
    Node* gprev = t.gprev.node;
    Node* sibling = prev->load_child(opposite(curr_side));
    gprev->store_child(side_of(prev->val, gprev->val), sibling);
    unlink(curr);
    unlink(prev);
  }
  --size_;
  return true;
}

}  // namespace cobst
