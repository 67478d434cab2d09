#include <gtest/gtest.h>

#include <thread>
#include <vector>

#include "cobst/reclamation.hpp"

using namespace cobst;

namespace {

Node* deleted_node(Key k) {
  Node* n = new Node(k, NodeState::Data);
  n->mark_deleted();
  return n;
}

}  // namespace

TEST(EpochDomain, NeverModeKeepsUntilQuiesce) {
  EpochDomain d(ReclaimMode::Never);
  {
    auto g = d.pin();
    for (int i = 0; i < 500; ++i) d.retire(g, deleted_node(i));
  }
  EXPECT_EQ(d.pending(), 500u);
  EXPECT_EQ(d.reclaimed(), 0u);
  d.quiesce();
  EXPECT_EQ(d.pending(), 0u);
  EXPECT_EQ(d.reclaimed(), 500u);
}

TEST(EpochDomain, EpochModeFreesAfterGracePeriods) {
  EpochDomain d(ReclaimMode::Epoch);
  for (int i = 0; i < 1000; ++i) {
    auto g = d.pin();
    d.retire(g, deleted_node(i));
  }
  EXPECT_GT(d.reclaimed(), 0u);
  EXPECT_GE(d.epoch(), 2u);
  d.quiesce();
  EXPECT_EQ(d.reclaimed(), 1000u);
}

TEST(EpochDomain, PinnedThreadHoldsBackTheEpoch) {
  EpochDomain d(ReclaimMode::Epoch);
  std::atomic<bool> pinned{false}, release{false};
  std::thread reader([&] {
    auto g = d.pin();
    pinned = true;
    while (!release) std::this_thread::yield();
  });
  while (!pinned) std::this_thread::yield();
  const auto start = d.epoch();
  for (int i = 0; i < 1000; ++i) {
    auto g = d.pin();
    d.retire(g, deleted_node(i));
  }
  // The reader announced `start`; the epoch can move at most once past it,
  // so nothing retired at or after `start` is freed.
  EXPECT_LE(d.epoch(), start + 1);
  EXPECT_EQ(d.reclaimed(), 0u);
  release = true;
  reader.join();
  d.quiesce();
  EXPECT_EQ(d.reclaimed(), 1000u);
}

TEST(EpochDomain, StatsSurviveThreadExit) {
  EpochDomain d;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&] {
      auto g = d.pin();
      EpochDomain::Slot::bump(g.slot().completed_ops, 10);
      EpochDomain::Slot::bump(g.slot().restarts);
    });
  for (auto& th : threads) th.join();
  const SetStats s = d.stats();
  EXPECT_EQ(s.completed_ops, 80u);
  EXPECT_EQ(s.restarts, 8u);
}

TEST(EpochDomain, SlotsAreReusedAcrossManyThreads) {
  EpochDomain d;
  for (int round = 0; round < 3 * static_cast<int>(EpochDomain::kMaxThreads) / 8;
       ++round) {
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&] {
        auto g = d.pin();
        d.retire(g, deleted_node(t));
      });
    for (auto& th : threads) th.join();
  }
  d.quiesce();
  EXPECT_EQ(d.pending(), 0u);
}

TEST(EpochDomainDeathTest, RetireRequiresDeletedMark) {
  EXPECT_DEATH(
      {
        EpochDomain d;
        auto g = d.pin();
        d.retire(g, new Node(1, NodeState::Data));
      },
      "not deleted");
}
