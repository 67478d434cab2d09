#ifndef COBST_BENCH_HPP
#define COBST_BENCH_HPP

/// \file
/// Throughput benchmark: workload generation, prefill, warmup and timed
/// measurement over the concurrent tree or a coarse-locked baseline, plus
/// CSV output.
///
/// Keys are uniform over [0, range). With update percentage x, each drawn
/// operation is an insert with probability x/200, a delete with probability
/// x/200 and a contains otherwise.

#include <cstdint>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cobst/history.hpp"
#include "cobst/key.hpp"
#include "cobst/tree_core.hpp"

namespace cobst {

enum class Impl : std::uint8_t { CoBst, CoarseBst };

[[nodiscard]] const char* to_string(Impl impl) noexcept;
[[nodiscard]] std::optional<Impl> parse_impl(std::string_view text);

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct WorkloadConfig {
  Impl impl = Impl::CoBst;
  unsigned threads = 1;
  Key key_range = Key{1} << 15;
  unsigned update_pct = 20;
  std::uint64_t duration_ms = 10'000;
  std::uint64_t warmup_ms = 5'000;
  std::uint64_t seed = 1;
  bool prefill = true;
  /// When set, every thread runs exactly this many operations instead of
  /// running for a duration, and there is no warmup.
  std::optional<std::uint64_t> ops_per_thread;

  /// Throws ConfigError describing the first invalid field.
  void validate() const;
};

inline constexpr std::uint64_t kCiDurationMs = 1'000;
inline constexpr std::uint64_t kCiWarmupMs = 200;

struct BenchResult {
  Impl impl = Impl::CoBst;
  unsigned threads = 0;
  Key range = 0;
  unsigned update_pct = 0;
  double duration_ms = 0;  // measured
  double throughput_ops_s = 0;
  std::uint64_t inserts = 0;
  std::uint64_t deletes = 0;
  std::uint64_t contains = 0;
  std::uint64_t restarts = 0;

  // Not part of the CSV.
  std::uint64_t insert_successes = 0;
  std::uint64_t delete_successes = 0;
  std::uint64_t contains_hits = 0;
  std::uint64_t prefill_size = 0;

  [[nodiscard]] std::uint64_t total() const noexcept {
    return inserts + deletes + contains;
  }
};

/// Per-thread operation stream.
class WorkloadGenerator {
 public:
  WorkloadGenerator(std::uint64_t seed, unsigned thread, Key key_range,
                    unsigned update_pct);

  struct Draw {
    OpKind op;
    Key key;
  };
  Draw next();

 private:
  std::mt19937_64 rng_;
  std::uniform_int_distribution<Key> key_;
  std::uniform_int_distribution<unsigned> mix_{0, 199};
  unsigned update_pct_;
};

/// Sequential tree under one global exclusive lock.
class CoarseSet {
 public:
  bool contains(Key v);
  bool insert(Key v);
  bool remove(Key v);
  [[nodiscard]] std::size_t size();

 private:
  std::mutex mutex_;
  SeqTree tree_;
};

[[nodiscard]] BenchResult run_bench(const WorkloadConfig& cfg);

inline constexpr std::string_view kCsvHeader =
    "impl,threads,range,update_pct,duration_ms,throughput_ops_s,inserts,"
    "deletes,contains,restarts";

void write_csv(std::ostream& os, const std::vector<BenchResult>& results);
/// Throws std::system_error carrying the OS error when the file cannot be
/// written.
void emit_csv(const std::vector<BenchResult>& results, const std::string& path);
/// Parses what write_csv produced. Throws std::runtime_error on bad input.
[[nodiscard]] std::vector<BenchResult> parse_csv(std::istream& is);

/// Accepts a decimal number or `2^k`.
[[nodiscard]] Key parse_range(std::string_view text);

}  // namespace cobst

#endif  // COBST_BENCH_HPP
