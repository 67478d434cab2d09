#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <set>
#include <thread>
#include <vector>

#include "cobst/concurrent_set.hpp"
#include "cobst/tracking_instrument.hpp"

using namespace cobst;

TEST(ConcurrentSet, EmptySet) {
  ConcurrentSet s;
  EXPECT_FALSE(s.contains(3));
  EXPECT_FALSE(s.remove(3));
  EXPECT_EQ(s.dump(), "(∞ D _ _)");
  EXPECT_TRUE(s.validate().ok());
}

TEST(ConcurrentSet, ReservedKeyRejected) {
  ConcurrentSet s;
  EXPECT_THROW(s.insert(kPlusInf), KeyError);
  EXPECT_THROW(s.contains(kPlusInf), KeyError);
  EXPECT_THROW(s.remove(kPlusInf), KeyError);
}

TEST(ConcurrentSet, InsertContainsRemove) {
  ConcurrentSet s;
  EXPECT_TRUE(s.insert(5));
  EXPECT_FALSE(s.insert(5));
  EXPECT_TRUE(s.contains(5));
  EXPECT_TRUE(s.remove(5));
  EXPECT_FALSE(s.contains(5));
  EXPECT_FALSE(s.remove(5));
}

TEST(ConcurrentSet, DeleteCases) {
  BasicConcurrentSet<TrackingInstrument> s;
  for (Key k : {5, 3, 7, 1}) s.insert(k);
  // One child: 3 has only 1 below it.
  EXPECT_TRUE(s.remove(3));
  EXPECT_EQ(s.dump(), "(∞ D (5 D (1 D _ _) (7 D _ _)) _)");
  // Two children: 5 becomes ROUTING.
  EXPECT_TRUE(s.remove(5));
  EXPECT_EQ(s.dump(), "(∞ D (5 R (1 D _ _) (7 D _ _)) _)");
  // Leaf under a ROUTING parent: the parent goes too.
  EXPECT_TRUE(s.remove(1));
  EXPECT_EQ(s.dump(), "(∞ D (7 D _ _) _)");
  // Leaf under a DATA parent (the root).
  EXPECT_TRUE(s.remove(7));
  EXPECT_EQ(s.dump(), "(∞ D _ _)");
  const auto v = s.validate();
  EXPECT_TRUE(v.ok()) << v.to_string();
  EXPECT_EQ(s.instrument().unlinked().size(), 4u);
}

TEST(ConcurrentSet, InsertRevivesRoutingNode) {
  ConcurrentSet s;
  for (Key k : {5, 3, 7}) s.insert(k);
  s.remove(5);
  EXPECT_TRUE(s.insert(5));
  EXPECT_EQ(s.dump(), "(∞ D (5 D (3 D _ _) (7 D _ _)) _)");
}

TEST(ConcurrentSet, SingleThreadOracle) {
  std::mt19937_64 rng(11);
  ConcurrentSet s;
  std::set<Key> ref;
  for (int i = 0; i < 50000; ++i) {
    const Key k = static_cast<Key>(rng() % 128);
    switch (rng() % 3) {
      case 0:
        ASSERT_EQ(s.insert(k), ref.insert(k).second);
        break;
      case 1:
        ASSERT_EQ(s.remove(k), ref.erase(k) == 1);
        break;
      default:
        ASSERT_EQ(s.contains(k), ref.count(k) == 1);
    }
  }
  EXPECT_EQ(s.keys(), std::vector<Key>(ref.begin(), ref.end()));
  EXPECT_TRUE(s.validate().ok());
  const SetStats st = s.stats();
  EXPECT_EQ(st.restarts, 0u);
  EXPECT_EQ(st.contains_lock_acquisitions, 0u);
  EXPECT_EQ(st.completed_ops, 50000u);
  EXPECT_GT(st.lock_acquisitions, 0u);
}

TEST(ConcurrentSet, ContainsTakesNoLocks) {
  ConcurrentSet s;
  for (Key k = 0; k < 100; ++k) s.insert(k);
  const auto before = s.stats().lock_acquisitions;
  for (Key k = 0; k < 200; ++k) (void)s.contains(k);
  EXPECT_EQ(s.stats().lock_acquisitions, before);
  EXPECT_EQ(s.stats().contains_lock_acquisitions, 0u);
}

TEST(ConcurrentSet, EpochReclamationFreesNodes) {
  ConcurrentSet s;
  for (int round = 0; round < 50; ++round) {
    for (Key k = 0; k < 64; ++k) s.insert(k);
    for (Key k = 0; k < 64; ++k) s.remove(k);
  }
  EXPECT_GT(s.reclamation().reclaimed(), 0u);
  s.reclamation().quiesce();
  EXPECT_EQ(s.reclamation().pending(), 0u);
}

TEST(ConcurrentSet, MultiThreadedStressKeepsStructure) {
  BasicConcurrentSet<TrackingInstrument> s;
  constexpr int kThreads = 4;
  std::atomic<bool> stop{false};
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 rng(100 + t);
      while (!stop.load(std::memory_order_relaxed)) {
        const Key k = static_cast<Key>(rng() % 64);
        switch (rng() % 4) {
          case 0:
            s.insert(k);
            break;
          case 1:
            s.remove(k);
            break;
          default:
            (void)s.contains(k);
        }
      }
    });
  }
  std::this_thread::sleep_for(std::chrono::milliseconds(800));
  stop = true;
  for (auto& th : threads) th.join();
  const auto v = s.validate();
  EXPECT_TRUE(v.ok()) << v.to_string();
  EXPECT_EQ(s.stats().contains_lock_acquisitions, 0u);
  // The resident keys are exactly what contains reports.
  const auto keys = s.keys();
  for (Key k = 0; k < 64; ++k)
    EXPECT_EQ(s.contains(k),
              std::find(keys.begin(), keys.end(), k) != keys.end());
}

// Disjoint key ranges per thread: each thread's own results follow the
// sequential reference exactly.
TEST(ConcurrentSet, DisjointThreadsMatchOracle) {
  ConcurrentSet s;
  std::atomic<int> mismatches{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      std::mt19937_64 rng(t);
      std::set<Key> ref;
      for (int i = 0; i < 20000; ++i) {
        const Key k = static_cast<Key>((rng() % 32) * 4 + t);
        bool ok = true;
        switch (rng() % 3) {
          case 0:
            ok = s.insert(k) == ref.insert(k).second;
            break;
          case 1:
            ok = s.remove(k) == (ref.erase(k) == 1);
            break;
          default:
            ok = s.contains(k) == (ref.count(k) == 1);
        }
        if (!ok) ++mismatches;
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(mismatches.load(), 0);
  EXPECT_TRUE(s.validate().ok());
}

// Removers of sibling leaves under a ROUTING parent each lock their own
// edge and then want the other's. Restarts must not keep them in lockstep.
TEST(ConcurrentSet, ContendedUpdatesMakeProgress) {
  constexpr unsigned kThreads = 8;
  constexpr int kOps = 300'000;
  BasicConcurrentSet<TrackingInstrument> s;
  std::vector<std::thread> ts;
  for (unsigned t = 0; t < kThreads; ++t)
    ts.emplace_back([&s, t] {
      std::mt19937_64 rng(t);
      for (int i = 0; i < kOps; ++i) {
        const Key k = static_cast<Key>(rng() % 8);
        if (rng() % 2)
          s.insert(k);
        else
          s.remove(k);
      }
    });
  for (auto& th : ts) th.join();
  EXPECT_EQ(s.stats().completed_ops, std::uint64_t{kThreads} * kOps);
  EXPECT_TRUE(s.validate().ok()) << s.validate().to_string();
}
