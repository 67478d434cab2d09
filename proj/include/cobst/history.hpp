#ifndef COBST_HISTORY_HPP
#define COBST_HISTORY_HPP

/// \file
/// Operation histories: events, the text file format, and a thread-safe
/// recorder.
///
/// File format, one event per line:
///   <seq> <thread> <INV|RES> <INSERT|DELETE|CONTAINS> <key> [<true|false>]
/// Blank lines and lines starting with '#' are ignored.

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cobst/key.hpp"

namespace cobst {

enum class OpKind : std::uint8_t { Insert, Delete, Contains };
enum class EventKind : std::uint8_t { Invoke, Respond };

[[nodiscard]] const char* to_string(OpKind op) noexcept;
[[nodiscard]] std::optional<OpKind> parse_op_kind(std::string_view text);

using ThreadId = std::uint32_t;

struct HistoryEvent {
  std::uint64_t seq = 0;
  ThreadId thread = 0;
  EventKind kind = EventKind::Invoke;
  OpKind op = OpKind::Contains;
  Key key = 0;
  std::optional<bool> ret;  // Respond only

  friend bool operator==(const HistoryEvent&, const HistoryEvent&) = default;
};

struct History {
  std::vector<HistoryEvent> events;

  friend bool operator==(const History&, const History&) = default;
};

class HistoryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws HistoryError unless seq is strictly increasing and every thread
/// alternates Invoke/Respond with matching op and key.
void check_well_formed(const History& h);

[[nodiscard]] std::string format_event(const HistoryEvent& e);
void write_history(std::ostream& os, const History& h);
[[nodiscard]] History read_history(std::istream& is);
[[nodiscard]] History load_history_file(const std::string& path);

/// Thread-safe history recorder. Each logical thread appends to its own
/// buffer; a single atomic counter orders events globally. Merge with
/// history() once all recording threads are quiescent.
class HistoryRecorder {
 public:
  explicit HistoryRecorder(std::size_t max_threads);

  void invoke(ThreadId thread, OpKind op, Key key);
  void respond(ThreadId thread, OpKind op, Key key, bool ret);

  [[nodiscard]] History history() const;

 private:
  struct alignas(64) Buffer {
    std::vector<HistoryEvent> events;
  };

  std::atomic<std::uint64_t> next_seq_{1};
  std::unique_ptr<Buffer[]> buffers_;
  std::size_t max_threads_;
};

}  // namespace cobst

#endif  // COBST_HISTORY_HPP
