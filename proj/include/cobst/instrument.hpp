#ifndef COBST_INSTRUMENT_HPP
#define COBST_INSTRUMENT_HPP

/// \file
/// Compile-time instrumentation points of the tree algorithms.
///
/// Every shared-memory access to a mutable node field, every conditional
/// lock attempt and every node allocation is preceded by a call to
/// `Instrument::access(site)`. The default `NullInstrument` compiles all of
/// it away; the schedule harness and the stress tests plug in their own.

#include <cstdint>

#include "cobst/cond_rw_lock.hpp"
#include "cobst/node.hpp"
#include "cobst/structural_trace.hpp"

namespace cobst {

enum class AccessKind : std::uint8_t { Read, Write, LockAttempt, NodeCreate };

[[nodiscard]] constexpr const char* to_string(AccessKind k) noexcept {
  switch (k) {
    case AccessKind::Read:
      return "Read";
    case AccessKind::Write:
      return "Write";
    case AccessKind::LockAttempt:
      return "LockAttempt";
    case AccessKind::NodeCreate:
      return "NodeCreate";
  }
  return "?";
}

// X(name, kind). Order is part of the site-id contract: append only.
#define COBST_SITES(X)                              \
  X(TraverseReadChild, Read)                        \
  X(ContainsReadState, Read)                        \
  X(InsertReadState, Read)                          \
  X(InsertLockStateRouting, LockAttempt)            \
  X(InsertWriteState, Write)                        \
  X(InsertCreateNode, NodeCreate)                   \
  X(InsertLockEdgeNull, LockAttempt)                \
  X(InsertReadLockPrevState, LockAttempt)           \
  X(InsertReadPrevDeleted, Read)                    \
  X(InsertLink, Write)                              \
  X(DeleteReadState, Read)                          \
  X(DeleteReadLeft, Read)                           \
  X(DeleteReadRight, Read)                          \
  X(DeleteReadPrevState, Read)                      \
  X(TwoChildLockState, LockAttempt)                 \
  X(TwoChildReadLeft, Read)                         \
  X(TwoChildReadRight, Read)                        \
  X(TwoChildWriteState, Write)                      \
  X(OneChildLockCurrEdge, LockAttempt)              \
  X(OneChildLockPrevEdge, LockAttempt)              \
  X(OneChildLockState, LockAttempt)                 \
  X(OneChildReadLeft, Read)                         \
  X(OneChildReadRight, Read)                        \
  X(OneChildMarkDeleted, Write)                     \
  X(OneChildUnlink, Write)                          \
  X(LeafLockPrevEdgeVal, LockAttempt)               \
  X(LeafReadCurr, Read)                             \
  X(LeafLockState, LockAttempt)                     \
  X(LeafReadLeft, Read)                             \
  X(LeafReadRight, Read)                            \
  X(DataParentReadLockState, LockAttempt)           \
  X(DataParentMarkDeleted, Write)                   \
  X(DataParentUnlink, Write)                        \
  X(RoutingParentReadSibling, Read)                 \
  X(RoutingParentLockSiblingEdge, LockAttempt)      \
  X(RoutingParentLockGprevEdge, LockAttempt)        \
  X(RoutingParentLockState, LockAttempt)            \
  X(RoutingParentMarkPrevDeleted, Write)            \
  X(RoutingParentMarkCurrDeleted, Write)            \
  X(RoutingParentUnlink, Write)

enum class Site : std::uint8_t {
#define COBST_SITE_ENUM(name, kind) name,
  COBST_SITES(COBST_SITE_ENUM)
#undef COBST_SITE_ENUM
      kCount
};

inline constexpr std::size_t kSiteCount = static_cast<std::size_t>(Site::kCount);

[[nodiscard]] constexpr const char* to_string(Site s) noexcept {
  switch (s) {
#define COBST_SITE_NAME(name, kind) \
  case Site::name:                  \
    return #name;
    COBST_SITES(COBST_SITE_NAME)
#undef COBST_SITE_NAME
    case Site::kCount:
      break;
  }
  return "?";
}

[[nodiscard]] constexpr AccessKind site_kind(Site s) noexcept {
  switch (s) {
#define COBST_SITE_KIND(name, kind) \
  case Site::name:                  \
    return AccessKind::kind;
    COBST_SITES(COBST_SITE_KIND)
#undef COBST_SITE_KIND
    case Site::kCount:
      break;
  }
  return AccessKind::Read;
}

/// No-op instrumentation for production builds.
struct NullInstrument {
  /// Assign node ids, report structural writes and unlinks.
  static constexpr bool kTracksNodes = false;
  /// Contended lock attempts wait for the lock instead of backing off and
  /// restarting. Only meaningful under a scheduler that can tell when the
  /// lock becomes free.
  static constexpr bool kBlockOnContention = false;

  void access(Site) noexcept {}
  /// Called after a Contended outcome when kBlockOnContention is set.
  /// False makes the attempt give up and restart.
  bool on_contended(const CondRwLock&, LockMode) noexcept { return true; }
  void on_locked(const CondRwLock&, LockMode) noexcept {}
  void on_unlocked(const CondRwLock&, LockMode) noexcept {}
  void on_condition_violated(Site) noexcept {}
  void on_attempt_start() noexcept {}
  void on_restart() noexcept {}
  void on_write(const StructuralEvent&) {}
  void on_unlink(const Node&) {}
};

}  // namespace cobst

#endif  // COBST_INSTRUMENT_HPP
