#include <gtest/gtest.h>

#include <random>
#include <set>

#include "cobst/observable.hpp"
#include "cobst/tree_core.hpp"

using namespace cobst;

namespace {

std::vector<Key> sorted(const std::set<Key>& s) { return {s.begin(), s.end()}; }

}  // namespace

TEST(SeqTree, EmptyTree) {
  SeqTree t;
  EXPECT_FALSE(t.contains(1));
  EXPECT_EQ(t.size(), 0u);
  EXPECT_EQ(t.dump(), "(∞ D _ _)");
  EXPECT_TRUE(t.validate().ok());
}

TEST(SeqTree, DumpFormat) {
  SeqTree t;
  t.insert(5);
  t.insert(3);
  t.insert(7);
  EXPECT_EQ(t.dump(), "(∞ D (5 D (3 D _ _) (7 D _ _)) _)");
  t.remove(5);
  EXPECT_EQ(t.dump(), "(∞ D (5 R (3 D _ _) (7 D _ _)) _)");
}

TEST(SeqTree, InsertDuplicateReturnsFalse) {
  SeqTree t;
  EXPECT_TRUE(t.insert(4));
  EXPECT_FALSE(t.insert(4));
  EXPECT_TRUE(t.contains(4));
}

TEST(SeqTree, ReservedKeyRejected) {
  SeqTree t;
  EXPECT_THROW(t.insert(kPlusInf), KeyError);
  EXPECT_THROW((void)t.contains(kPlusInf), KeyError);
  EXPECT_THROW(t.remove(kPlusInf), KeyError);
}

TEST(SeqTree, RemoveTwoChildrenMakesRouting) {
  SeqTree t;
  for (Key k : {5, 3, 7}) t.insert(k);
  EXPECT_TRUE(t.remove(5));
  EXPECT_FALSE(t.contains(5));
  EXPECT_EQ(t.validate().routing_nodes, 1u);
  // Re-inserting revives the routing node in place.
  EXPECT_TRUE(t.insert(5));
  EXPECT_EQ(t.dump(), "(∞ D (5 D (3 D _ _) (7 D _ _)) _)");
}

TEST(SeqTree, RemoveOneChildSplices) {
  SeqTree t;
  for (Key k : {5, 3, 1}) t.insert(k);
  EXPECT_TRUE(t.remove(3));
  EXPECT_EQ(t.dump(), "(∞ D (5 D (1 D _ _) _) _)");
}

TEST(SeqTree, RemoveLeafUnderDataParent) {
  SeqTree t;
  for (Key k : {5, 3}) t.insert(k);
  EXPECT_TRUE(t.remove(3));
  EXPECT_EQ(t.dump(), "(∞ D (5 D _ _) _)");
}

TEST(SeqTree, RemoveLeafUnderRoutingParentRemovesBoth) {
  SeqTree t(true);
  for (Key k : {5, 3, 7}) t.insert(k);
  t.remove(5);
  EXPECT_TRUE(t.remove(3));
  EXPECT_EQ(t.dump(), "(∞ D (7 D _ _) _)");
  EXPECT_TRUE(t.validate().ok());
}

TEST(SeqTree, RemoveAbsentOrRoutingReturnsFalse) {
  SeqTree t;
  for (Key k : {5, 3, 7}) t.insert(k);
  t.remove(5);
  EXPECT_FALSE(t.remove(5));
  EXPECT_FALSE(t.remove(42));
}

TEST(SeqTree, TraverseFindsKeyAndParents) {
  SeqTree t;
  for (Key k : {5, 3, 4}) t.insert(k);
  const auto r = t.traverse(4);
  ASSERT_NE(r.curr.node, nullptr);
  EXPECT_EQ(r.curr.node->val, 4);
  EXPECT_EQ(r.prev.node->val, 3);
  EXPECT_EQ(r.gprev.node->val, 5);
  const auto miss = t.traverse(6);
  EXPECT_EQ(miss.curr.node, nullptr);
  EXPECT_EQ(miss.prev.node->val, 5);
}

TEST(SeqTree, RandomAgainstStdSet) {
  std::mt19937_64 rng(7);
  for (int round = 0; round < 20; ++round) {
    SeqTree t(true);
    std::set<Key> ref;
    for (int i = 0; i < 3000; ++i) {
      const Key k = static_cast<Key>(rng() % 64);
      switch (rng() % 3) {
        case 0:
          ASSERT_EQ(t.insert(k), ref.insert(k).second);
          break;
        case 1:
          ASSERT_EQ(t.remove(k), ref.erase(k) == 1);
          break;
        default:
          ASSERT_EQ(t.contains(k), ref.count(k) == 1);
      }
    }
    const auto report = t.validate();
    ASSERT_TRUE(report.ok()) << report.to_string();
    EXPECT_EQ(t.keys(), sorted(ref));
    EXPECT_EQ(t.size(), ref.size());
    EXPECT_EQ(report.data_nodes, ref.size());
  }
}

TEST(SeqTree, SnapshotTraceIsObservablyCorrect) {
  SeqTree t;
  for (Key k : {8, 4, 12, 2, 6, 10, 14}) t.insert(k);
  t.remove(4);
  const auto trace = snapshot_trace(t.root());
  EXPECT_TRUE(check_observable_correctness(trace).ok());
}

// Hand-built trees for the validator.

class ValidatorTest : public ::testing::Test {
 protected:
  ~ValidatorTest() override { destroy_subtree(root); }
  Node* root = new Node(kPlusInf, NodeState::Data, 1);
};

TEST_F(ValidatorTest, FreshTreeIsClean) {
  EXPECT_TRUE(validate_structure(root).ok());
}

TEST_F(ValidatorTest, NullRoot) {
  EXPECT_TRUE(validate_structure(nullptr).has(Violation::Kind::NullRoot));
}

TEST_F(ValidatorTest, RoutingLeafViolatesArity) {
  root->store_child(Side::Left, new Node(5, NodeState::Routing, 2));
  const auto r = validate_structure(root);
  EXPECT_TRUE(r.has(Violation::Kind::RoutingArity));
}

TEST_F(ValidatorTest, ValueProperty) {
  Node* five = new Node(5, NodeState::Data, 2);
  root->store_child(Side::Left, five);
  five->store_child(Side::Left, new Node(9, NodeState::Data, 3));
  EXPECT_TRUE(validate_structure(root).has(Violation::Kind::ValueProperty));
}

TEST_F(ValidatorTest, DeletedNodeReachable) {
  Node* five = new Node(5, NodeState::Data, 2);
  root->store_child(Side::Left, five);
  five->mark_deleted();
  EXPECT_TRUE(validate_structure(root).has(Violation::Kind::DeletedReachable));
}

TEST_F(ValidatorTest, UnlinkedNodeReachable) {
  root->store_child(Side::Left, new Node(5, NodeState::Data, 2));
  UnlinkedRegistry registry;
  registry.add(2);
  EXPECT_TRUE(
      validate_structure(root, &registry).has(Violation::Kind::Resurrected));
  EXPECT_TRUE(validate_structure(root).ok());
}

TEST(ValidatorShared, NodeReachableTwice) {
  Node root(kPlusInf, NodeState::Data, 1);
  Node five(5, NodeState::Routing, 2);
  Node three(3, NodeState::Data, 3);
  root.store_child(Side::Left, &five);
  five.store_child(Side::Left, &three);
  five.store_child(Side::Right, &three);
  const auto r = validate_structure(&root);
  EXPECT_TRUE(r.has(Violation::Kind::NotATree));
}

TEST(Keys, ClientKeys) {
  EXPECT_TRUE(is_client_key(0));
  EXPECT_TRUE(is_client_key(-5));
  EXPECT_FALSE(is_client_key(kPlusInf));
  EXPECT_THROW(require_client_key(kPlusInf), KeyError);
}
