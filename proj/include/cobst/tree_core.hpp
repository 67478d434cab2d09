#ifndef COBST_TREE_CORE_HPP
#define COBST_TREE_CORE_HPP

/// \file
/// Partially-external BST: node snapshots, the lock-free descent shared by
/// all tree variants, the structural validator, and the single-threaded
/// reference tree.
///
/// Search order follows the value property: keys smaller than a node live
/// in its left subtree, larger keys in its right subtree.

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "cobst/instrument.hpp"
#include "cobst/key.hpp"
#include "cobst/node.hpp"

namespace cobst {

/// A node plus the fields an operation has already read from it. Once a
/// field is cached every later read in the same operation returns the
/// cached value.
struct CachedNode {
  Node* node = nullptr;
  std::optional<Node*> left;
  std::optional<Node*> right;
  std::optional<NodeState> state;

  [[nodiscard]] std::optional<Node*>& cached_child(Side s) noexcept {
    return s == Side::Left ? left : right;
  }
  [[nodiscard]] const std::optional<Node*>& cached_child(
      Side s) const noexcept {
    return s == Side::Left ? left : right;
  }
};

struct TraversalResult {
  CachedNode gprev;
  CachedNode prev;
  CachedNode curr;  // null when the key is absent from the search path
};

/// Read `c.node`'s child on side `s`, through the cache.
template <typename Instrument>
Node* read_child(CachedNode& c, Side s, Instrument& inst, Site site) {
  auto& slot = c.cached_child(s);
  if (!slot) {
    inst.access(site);
    slot = c.node->load_child(s);
  }
  return *slot;
}

/// Read `c.node`'s state, through the cache.
template <typename Instrument>
NodeState read_state(CachedNode& c, Instrument& inst, Site site) {
  if (!c.state) {
    inst.access(site);
    c.state = c.node->load_state();
  }
  return *c.state;
}

/// Lock-free descent from `root` toward `v`. Stops at the node holding `v`
/// or at a null child; returns the last three nodes visited. Acquires no
/// locks and never restarts.
template <typename Instrument>
TraversalResult traverse(Node* root, Key v, Instrument& inst) {
  TraversalResult r;
  r.curr.node = root;
  while (r.curr.node != nullptr && r.curr.node->val != v) {
    r.gprev = std::move(r.prev);
    r.prev = std::move(r.curr);
    Node* next =
        read_child(r.prev, side_of(v, r.prev.node->val), inst,
                   Site::TraverseReadChild);
    r.curr = CachedNode{next, {}, {}, {}};
  }
  return r;
}

inline TraversalResult traverse(Node* root, Key v) {
  NullInstrument inst;
  return traverse(root, v, inst);
}

/// Ids of nodes that have been physically removed from a tree. Used by the
/// validator to detect resurrected nodes.
class UnlinkedRegistry {
 public:
  void add(NodeId id) {
    std::lock_guard lock(mutex_);
    ids_.insert(id);
  }
  [[nodiscard]] bool contains(NodeId id) const {
    std::lock_guard lock(mutex_);
    return ids_.count(id) != 0;
  }
  [[nodiscard]] std::size_t size() const {
    std::lock_guard lock(mutex_);
    return ids_.size();
  }

 private:
  mutable std::mutex mutex_;
  std::unordered_set<NodeId> ids_;
};

struct Violation {
  enum class Kind : std::uint8_t {
    NullRoot,
    NotATree,       // a node reached twice
    ValueProperty,  // key outside the interval allowed by its ancestors
    RoutingArity,   // ROUTING node without exactly two children
    DeletedReachable,
    Resurrected,    // reachable node previously unlinked
  };

  Kind kind;
  Key key;
  std::string detail;
};

[[nodiscard]] const char* to_string(Violation::Kind k) noexcept;

struct ValidationReport {
  std::vector<Violation> violations;
  std::size_t reachable = 0;
  std::size_t data_nodes = 0;     // excluding the root sentinel
  std::size_t routing_nodes = 0;

  [[nodiscard]] bool ok() const noexcept { return violations.empty(); }
  [[nodiscard]] bool has(Violation::Kind k) const noexcept;
  [[nodiscard]] std::string to_string() const;
};

/// Structural check of the tree under `root`. Exact only when no mutator
/// runs concurrently.
[[nodiscard]] ValidationReport validate_structure(
    const Node* root, const UnlinkedRegistry* unlinked = nullptr);

/// Parenthesized preorder dump, e.g. `(∞ D (5 R (3 D _ _) (7 D _ _)) _)`.
[[nodiscard]] std::string dump_tree(const Node* root);

/// Keys of reachable DATA nodes in ascending order, sentinel excluded.
[[nodiscard]] std::vector<Key> collect_keys(const Node* root);

/// Frees every node reachable from `root`, including `root`.
void destroy_subtree(Node* root) noexcept;

/// Single-threaded partially-external BST. Reference semantics for the
/// concurrent set and the backing store of the coarse-locked baseline.
class SeqTree {
 public:
  explicit SeqTree(bool track_unlinked = false);
  ~SeqTree();

  SeqTree(const SeqTree&) = delete;
  SeqTree& operator=(const SeqTree&) = delete;

  [[nodiscard]] bool contains(Key v) const;
  bool insert(Key v);
  bool remove(Key v);

  [[nodiscard]] TraversalResult traverse(Key v) const {
    return cobst::traverse(root_, v);
  }

  [[nodiscard]] const Node* root() const noexcept { return root_; }
  [[nodiscard]] std::size_t size() const noexcept { return size_; }
  [[nodiscard]] std::vector<Key> keys() const { return collect_keys(root_); }
  [[nodiscard]] ValidationReport validate() const {
    return validate_structure(root_, unlinked_.get());
  }
  [[nodiscard]] std::string dump() const { return dump_tree(root_); }

 private:
  Node* make_node(Key v);
  void unlink(Node* n);

  Node* root_;
  std::size_t size_ = 0;
  NodeId next_id_ = 1;
  std::unique_ptr<UnlinkedRegistry> unlinked_;
};

}  // namespace cobst

#endif  // COBST_TREE_CORE_HPP
