#include "cobst/bench.hpp"

#include <atomic>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <memory>
#include <ostream>
#include <system_error>
#include <thread>

#include "cobst/concurrent_set.hpp"

namespace cobst {

const char* to_string(Impl impl) noexcept {
  switch (impl) {
    case Impl::CoBst:
      return "co-bst";
    case Impl::CoarseBst:
      return "coarse-bst";
  }
  return "?";
}

std::optional<Impl> parse_impl(std::string_view text) {
  if (text == "co-bst") return Impl::CoBst;
  if (text == "coarse-bst") return Impl::CoarseBst;
  return std::nullopt;
}

void WorkloadConfig::validate() const {
  if (threads == 0) throw ConfigError("threads must be at least 1");
  if (threads > 256) throw ConfigError("threads must be at most 256");
  if (key_range < 1) throw ConfigError("range must be at least 1");
  if (update_pct > 100) throw ConfigError("updates must be within [0, 100]");
  if (ops_per_thread) {
    if (*ops_per_thread == 0)
      throw ConfigError("ops per thread must be positive");
  } else if (duration_ms == 0) {
    throw ConfigError("duration must be positive");
  }
}

namespace {

// splitmix64 finalizer, so neighbouring thread indices get unrelated seeds.
std::uint64_t seed_for(std::uint64_t seed, unsigned thread) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (thread + 1ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

WorkloadGenerator::WorkloadGenerator(std::uint64_t seed, unsigned thread,
                                     Key key_range, unsigned update_pct)
    : rng_(seed_for(seed, thread)),
      key_(0, key_range - 1),
      update_pct_(update_pct) {}

WorkloadGenerator::Draw WorkloadGenerator::next() {
  const unsigned r = mix_(rng_);
  OpKind op = OpKind::Contains;
  if (r < update_pct_)
    op = OpKind::Insert;
  else if (r < 2 * update_pct_)
    op = OpKind::Delete;
  return {op, key_(rng_)};
}

bool CoarseSet::contains(Key v) {
  std::lock_guard lock(mutex_);
  return tree_.contains(v);
}

bool CoarseSet::insert(Key v) {
  std::lock_guard lock(mutex_);
  return tree_.insert(v);
}

bool CoarseSet::remove(Key v) {
  std::lock_guard lock(mutex_);
  return tree_.remove(v);
}

std::size_t CoarseSet::size() {
  std::lock_guard lock(mutex_);
  return tree_.size();
}

namespace {

struct CoAdapter {
  ConcurrentSet set;
  OpOutcome apply(OpKind op, Key k) {
    switch (op) {
      case OpKind::Insert:
        return set.insert_ex(k);
      case OpKind::Delete:
        return set.remove_ex(k);
      case OpKind::Contains:
        return set.contains_ex(k);
    }
    return {};
  }
};

struct CoarseAdapter {
  CoarseSet set;
  OpOutcome apply(OpKind op, Key k) {
    switch (op) {
      case OpKind::Insert:
        return {set.insert(k), 0};
      case OpKind::Delete:
        return {set.remove(k), 0};
      case OpKind::Contains:
        return {set.contains(k), 0};
    }
    return {};
  }
};

struct alignas(64) Counters {
  std::uint64_t inserts = 0, deletes = 0, contains = 0;
  std::uint64_t insert_ok = 0, delete_ok = 0, contains_hit = 0;
  std::uint64_t restarts = 0;

  void count(OpKind op, const OpOutcome& out) {
    restarts += out.restarts;
    switch (op) {
      case OpKind::Insert:
        ++inserts;
        insert_ok += out.result;
        break;
      case OpKind::Delete:
        ++deletes;
        delete_ok += out.result;
        break;
      case OpKind::Contains:
        ++contains;
        contains_hit += out.result;
        break;
    }
  }
};

enum Phase : int { kWarmup = 0, kMeasure = 1, kStop = 2 };

template <typename Adapter>
BenchResult run_with(Adapter& adapter, const WorkloadConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  BenchResult result;
  result.impl = cfg.impl;
  result.threads = cfg.threads;
  result.range = cfg.key_range;
  result.update_pct = cfg.update_pct;

  if (cfg.prefill) {
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<Key> key(0, cfg.key_range - 1);
    const auto target = static_cast<std::uint64_t>(cfg.key_range / 2);
    while (result.prefill_size < target)
      result.prefill_size += adapter.apply(OpKind::Insert, key(rng)).result;
  }

  std::vector<Counters> counters(cfg.threads);
  std::atomic<int> phase{cfg.ops_per_thread ? kMeasure : kWarmup};
  std::atomic<unsigned> ready{0};
  std::atomic<bool> go{false};

  std::vector<std::thread> threads;
  for (unsigned t = 0; t < cfg.threads; ++t) {
    threads.emplace_back([&, t] {
      WorkloadGenerator gen(cfg.seed, t, cfg.key_range, cfg.update_pct);
      Counters& c = counters[t];
      ready.fetch_add(1, std::memory_order_acq_rel);
      while (!go.load(std::memory_order_acquire)) std::this_thread::yield();
      if (cfg.ops_per_thread) {
        for (std::uint64_t i = 0; i < *cfg.ops_per_thread; ++i) {
          const auto d = gen.next();
          c.count(d.op, adapter.apply(d.op, d.key));
        }
        return;
      }
      for (;;) {
        const int ph = phase.load(std::memory_order_acquire);
        if (ph == kStop) break;
        const auto d = gen.next();
        const OpOutcome out = adapter.apply(d.op, d.key);
        if (ph == kMeasure) c.count(d.op, out);
      }
    });
  }
  while (ready.load(std::memory_order_acquire) < cfg.threads)
    std::this_thread::yield();

  Clock::time_point t0, t1;
  if (cfg.ops_per_thread) {
    t0 = Clock::now();
    go.store(true, std::memory_order_release);
    for (auto& th : threads) th.join();
    t1 = Clock::now();
  } else {
    go.store(true, std::memory_order_release);
    std::this_thread::sleep_for(std::chrono::milliseconds(cfg.warmup_ms));
    t0 = Clock::now();
    phase.store(kMeasure, std::memory_order_release);
    std::this_thread::sleep_for(std::chrono::milliseconds(cfg.duration_ms));
    phase.store(kStop, std::memory_order_release);
    t1 = Clock::now();
    for (auto& th : threads) th.join();
  }

  for (const auto& c : counters) {
    result.inserts += c.inserts;
    result.deletes += c.deletes;
    result.contains += c.contains;
    result.insert_successes += c.insert_ok;
    result.delete_successes += c.delete_ok;
    result.contains_hits += c.contains_hit;
    result.restarts += c.restarts;
  }
  result.duration_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();
  result.throughput_ops_s =
      result.duration_ms > 0
          ? static_cast<double>(result.total()) / (result.duration_ms / 1000.0)
          : 0.0;
  return result;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_field(std::string_view text, const char* name) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw std::runtime_error(std::string("bad CSV field ") + name + ": '" +
                             std::string(text) + "'");
  return value;
}

}  // namespace

BenchResult run_bench(const WorkloadConfig& cfg) {
  cfg.validate();
  if (cfg.impl == Impl::CoBst) {
    auto adapter = std::make_unique<CoAdapter>();
    return run_with(*adapter, cfg);
  }
  auto adapter = std::make_unique<CoarseAdapter>();
  return run_with(*adapter, cfg);
}

void write_csv(std::ostream& os, const std::vector<BenchResult>& results) {
  os << kCsvHeader << '\n';
  for (const auto& r : results)
    os << to_string(r.impl) << ',' << r.threads << ',' << r.range << ','
       << r.update_pct << ',' << format_double(r.duration_ms) << ','
       << format_double(r.throughput_ops_s) << ',' << r.inserts << ','
       << r.deletes << ',' << r.contains << ',' << r.restarts << '\n';
}

void emit_csv(const std::vector<BenchResult>& results,
              const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw std::system_error(errno, std::generic_category(),
                            "cannot write '" + path + "'");
  write_csv(out, results);
  out.flush();
  if (!out)
    throw std::system_error(errno, std::generic_category(),
                            "cannot write '" + path + "'");
}

std::vector<BenchResult> parse_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader)
    throw std::runtime_error("missing or unexpected CSV header");
  std::vector<BenchResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 10)
      throw std::runtime_error("CSV row has " + std::to_string(f.size()) +
                               " fields, expected 10");
    BenchResult r;
    const auto impl = parse_impl(f[0]);
    if (!impl)
      throw std::runtime_error("unknown impl '" + std::string(f[0]) + "'");
    r.impl = *impl;
    r.threads = parse_field<unsigned>(f[1], "threads");
    r.range = parse_field<Key>(f[2], "range");
    r.update_pct = parse_field<unsigned>(f[3], "update_pct");
    r.duration_ms = parse_field<double>(f[4], "duration_ms");
    r.throughput_ops_s = parse_field<double>(f[5], "throughput_ops_s");
    r.inserts = parse_field<std::uint64_t>(f[6], "inserts");
    r.deletes = parse_field<std::uint64_t>(f[7], "deletes");
    r.contains = parse_field<std::uint64_t>(f[8], "contains");
    r.restarts = parse_field<std::uint64_t>(f[9], "restarts");
    out.push_back(r);
  }
  return out;
}

Key parse_range(std::string_view text) {
  if (text.size() > 2 && text.substr(0, 2) == "2^") {
    const auto exp = parse_field<unsigned>(text.substr(2), "range exponent");
    if (exp > 62) throw ConfigError("range exponent must be at most 62");
    return Key{1} << exp;
  }
  try {
    return parse_field<Key>(text, "range");
  } catch (const std::runtime_error&) {
    throw ConfigError("range must be a number or 2^k, got '" +
                      std::string(text) + "'");
  }
}

}  // namespace cobst
