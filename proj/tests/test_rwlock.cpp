#include <gtest/gtest.h>

#include <atomic>
#include <thread>
#include <vector>

#include "cobst/cond_rw_lock.hpp"

using namespace cobst;

TEST(CondRwLock, FreshLockIsFree) {
  CondRwLock l;
  EXPECT_EQ(l.word(), CondRwLock::kFree);
  EXPECT_TRUE(l.admits(LockMode::Read));
  EXPECT_TRUE(l.admits(LockMode::Write));
}

TEST(CondRwLock, WriteLockWordEncoding) {
  CondRwLock l;
  ASSERT_EQ(l.try_write_lock(), LockOutcome::Acquired);
  EXPECT_EQ(l.word(), 1u);
  EXPECT_EQ(l.try_write_lock(), LockOutcome::Contended);
  EXPECT_EQ(l.try_read_lock(), LockOutcome::Contended);
  l.unlock_write();
  EXPECT_EQ(l.word(), 0u);
}

TEST(CondRwLock, ReadersCountInStepsOfTwo) {
  CondRwLock l;
  ASSERT_EQ(l.try_read_lock(), LockOutcome::Acquired);
  ASSERT_EQ(l.try_read_lock(), LockOutcome::Acquired);
  ASSERT_EQ(l.try_read_lock(), LockOutcome::Acquired);
  EXPECT_EQ(l.word(), 6u);
  EXPECT_EQ(l.try_write_lock(), LockOutcome::Contended);
  EXPECT_FALSE(l.admits(LockMode::Write));
  EXPECT_TRUE(l.admits(LockMode::Read));
  l.unlock_read();
  l.unlock_read();
  l.unlock_read();
  EXPECT_EQ(l.word(), 0u);
  EXPECT_EQ(l.try_write_lock(), LockOutcome::Acquired);
  l.unlock(LockMode::Write);
}

TEST(CondRwLock, AcquisitionCounter) {
  CondRwLock l;
  ASSERT_EQ(l.try_lock(LockMode::Read), LockOutcome::Acquired);
  l.unlock(LockMode::Read);
  ASSERT_EQ(l.try_lock(LockMode::Write), LockOutcome::Acquired);
  EXPECT_EQ(l.try_lock(LockMode::Write), LockOutcome::Contended);
  l.unlock(LockMode::Write);
  EXPECT_EQ(l.acquisitions(), 2u);
}

TEST(CondRwLock, ConditionCheckedBeforeAcquiring) {
  CondRwLock l;
  EXPECT_EQ(try_lock_with_condition(l, LockMode::Write, [] { return false; }),
            LockOutcome::ConditionViolated);
  EXPECT_EQ(l.word(), 0u);
  EXPECT_EQ(l.acquisitions(), 0u);
}

TEST(CondRwLock, ConditionRecheckedAfterAcquiring) {
  CondRwLock l;
  int calls = 0;
  // True before the CAS, false after it: the lock must be released again.
  const auto outcome = try_lock_with_condition(
      l, LockMode::Write, [&] { return ++calls == 1; });
  EXPECT_EQ(outcome, LockOutcome::ConditionViolated);
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(l.word(), 0u);
}

TEST(CondRwLock, ConditionalLockReportsContention) {
  CondRwLock l;
  ASSERT_EQ(l.try_write_lock(), LockOutcome::Acquired);
  EXPECT_EQ(try_lock_with_condition(l, LockMode::Read, [] { return true; }),
            LockOutcome::Contended);
  l.unlock_write();
  EXPECT_EQ(try_lock_with_condition(l, LockMode::Read, [] { return true; }),
            LockOutcome::Acquired);
  l.unlock_read();
}

TEST(CondRwLock, OutcomeNames) {
  EXPECT_STREQ(to_string(LockOutcome::Acquired), "Acquired");
  EXPECT_STREQ(to_string(LockOutcome::Contended), "Contended");
  EXPECT_STREQ(to_string(LockOutcome::ConditionViolated), "ConditionViolated");
}

TEST(Backoff, BoundedAttempts) {
  Backoff b(5);
  int n = 0;
  while (b.pause()) ++n;
  EXPECT_EQ(n, 5);
  EXPECT_FALSE(b.pause());
}

TEST(CondRwLockDeathTest, UnlockWriteWithoutHolding) {
  CondRwLock l;
  EXPECT_DEATH(l.unlock_write(), "unlock_write");
}

TEST(CondRwLockDeathTest, UnlockReadWithoutHolding) {
  CondRwLock l;
  EXPECT_DEATH(l.unlock_read(), "");
}

// A writer never coexists with any other holder.
TEST(CondRwLock, MutualExclusionUnderThreads) {
  CondRwLock l;
  std::atomic<int> writers{0}, readers{0};
  std::atomic<bool> bad{false};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 20000; ++i) {
        const LockMode mode = (i + t) % 3 == 0 ? LockMode::Write : LockMode::Read;
        Backoff backoff(1000000);
        while (l.try_lock(mode) != LockOutcome::Acquired) backoff.pause();
        if (mode == LockMode::Write) {
          if (writers.fetch_add(1) != 0 || readers.load() != 0) bad = true;
          writers.fetch_sub(1);
        } else {
          readers.fetch_add(1);
          if (writers.load() != 0) bad = true;
          readers.fetch_sub(1);
        }
        l.unlock(mode);
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_FALSE(bad.load());
  EXPECT_EQ(l.word(), 0u);
  EXPECT_EQ(l.acquisitions(), 80000u);
}
