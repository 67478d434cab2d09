#ifndef COBST_COND_RW_LOCK_HPP
#define COBST_COND_RW_LOCK_HPP

/// \file
/// Read-write spinlock over a single CAS word, plus the conditional
/// acquisition wrapper used by every node lock in the tree.
///
/// Word encoding:
///   0      free
///   1      write-held
///   2k     k readers (k >= 1)
///
/// Every transition is a single compare-and-swap: 0->1, w->w+2 (w even),
/// 1->0, w->w-2 (w even, w >= 2). Acquisition has acquire semantics and
/// release has release semantics; fields guarded by the lock are plain
/// atomic loads and stores inside the critical section.

#include <atomic>
#include <cassert>
#include <cstdint>
#include <thread>

namespace cobst {

enum class LockMode : std::uint8_t { Read, Write };

enum class LockOutcome : std::uint8_t {
  Acquired,
  /// CAS lost or the word excludes the requested mode. Word untouched.
  Contended,
  /// The guarded predicate failed, before or after acquisition. Not held.
  ConditionViolated,
};

[[nodiscard]] constexpr const char* to_string(LockOutcome o) noexcept {
  switch (o) {
    case LockOutcome::Acquired:
      return "Acquired";
    case LockOutcome::Contended:
      return "Contended";
    case LockOutcome::ConditionViolated:
      return "ConditionViolated";
  }
  return "?";
}

class CondRwLock {
 public:
  using word_type = std::uintptr_t;

  static constexpr word_type kFree = 0;
  static constexpr word_type kWriter = 1;
  static constexpr word_type kReader = 2;

  CondRwLock() noexcept = default;
  CondRwLock(const CondRwLock&) = delete;
  CondRwLock& operator=(const CondRwLock&) = delete;

  [[nodiscard]] LockOutcome try_write_lock() noexcept {
    word_type expected = kFree;
    if (word_.compare_exchange_strong(expected, kWriter,
                                      std::memory_order_acquire,
                                      std::memory_order_relaxed)) {
      note_acquired();
      return LockOutcome::Acquired;
    }
    return LockOutcome::Contended;
  }

  [[nodiscard]] LockOutcome try_read_lock() noexcept {
    word_type current = word_.load(std::memory_order_relaxed);
    if ((current & kWriter) != 0) return LockOutcome::Contended;
    if (word_.compare_exchange_strong(current, current + kReader,
                                      std::memory_order_acquire,
                                      std::memory_order_relaxed)) {
      note_acquired();
      return LockOutcome::Acquired;
    }
    return LockOutcome::Contended;
  }

  [[nodiscard]] LockOutcome try_lock(LockMode mode) noexcept {
    return mode == LockMode::Write ? try_write_lock() : try_read_lock();
  }

  void unlock_write() noexcept {
    word_type expected = kWriter;
    [[maybe_unused]] const bool ok = word_.compare_exchange_strong(
        expected, kFree, std::memory_order_release, std::memory_order_relaxed);
    assert(ok && "unlock_write without holding the write lock");
  }

  void unlock_read() noexcept {
    word_type current = word_.load(std::memory_order_relaxed);
    for (;;) {
      assert((current & kWriter) == 0 && current >= kReader &&
             "unlock_read without holding a read lock");
      if (word_.compare_exchange_weak(current, current - kReader,
                                      std::memory_order_release,
                                      std::memory_order_relaxed))
        return;
    }
  }

  void unlock(LockMode mode) noexcept {
    if (mode == LockMode::Write)
      unlock_write();
    else
      unlock_read();
  }

  /// Whether an attempt in `mode` could succeed right now.
  [[nodiscard]] bool admits(LockMode mode) const noexcept {
    const word_type w = word();
    return mode == LockMode::Write ? w == kFree : (w & kWriter) == 0;
  }

  [[nodiscard]] word_type word() const noexcept {
    return word_.load(std::memory_order_acquire);
  }

  /// Successful acquisitions of this lock, any mode. Debug aid only.
  [[nodiscard]] std::uint64_t acquisitions() const noexcept {
    return acquisitions_.load(std::memory_order_relaxed);
  }

 private:
  void note_acquired() noexcept {
    acquisitions_.fetch_add(1, std::memory_order_relaxed);
  }

  std::atomic<word_type> word_{kFree};
  std::atomic<std::uint64_t> acquisitions_{0};
};

/// Check `condition`, acquire, check again. Never leaves the lock held on a
/// non-Acquired outcome.
template <typename Condition>
[[nodiscard]] LockOutcome try_lock_with_condition(CondRwLock& lock,
                                                  LockMode mode,
                                                  Condition&& condition) {
  if (!condition()) return LockOutcome::ConditionViolated;
  const LockOutcome outcome = lock.try_lock(mode);
  if (outcome != LockOutcome::Acquired) return outcome;
  if (!condition()) {
    lock.unlock(mode);
    return LockOutcome::ConditionViolated;
  }
  return LockOutcome::Acquired;
}

/// Bounded exponential backoff for Contended outcomes.
class Backoff {
 public:
  static constexpr unsigned kDefaultAttempts = 64;

  explicit Backoff(unsigned max_attempts = kDefaultAttempts) noexcept
      : remaining_(max_attempts) {}

  /// Pause before the next attempt. False once the budget is spent.
  bool pause() noexcept {
    if (remaining_ == 0) return false;
    --remaining_;
    for (unsigned i = 0; i < spins_; ++i) cpu_relax();
    if (spins_ < kMaxSpins)
      spins_ <<= 1;
    else
      std::this_thread::yield();
    return true;
  }

 private:
  // Roughly a microsecond of pause instructions on current x86 parts.
  static constexpr unsigned kMaxSpins = 256;

  static void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#elif defined(__aarch64__)
    asm volatile("yield" ::: "memory");
#endif
  }

  unsigned remaining_;
  unsigned spins_{1};
};

/// Randomized pause between restarts of one operation. Up to
/// 2^min(round, 10) - 1 yields, so threads that keep defeating each other
/// fall out of step.
inline void restart_pause(unsigned round) noexcept {
  thread_local std::uint64_t state =
      0x9e3779b97f4a7c15ULL ^ reinterpret_cast<std::uintptr_t>(&state);
  state ^= state << 13;
  state ^= state >> 7;
  state ^= state << 17;
  const unsigned bits = round < 10 ? round : 10;
  const std::uint64_t n = state & ((std::uint64_t{1} << bits) - 1);
  for (std::uint64_t i = 0; i < n; ++i) std::this_thread::yield();
}

}  // namespace cobst

#endif  // COBST_COND_RW_LOCK_HPP
