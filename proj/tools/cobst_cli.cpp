// Command-line front end: benchmark runs, history checking, script replay.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

#include "cobst/bench.hpp"
#include "cobst/history.hpp"
#include "cobst/linearizability.hpp"
#include "cobst/schedule.hpp"

namespace {

int run_bench_command(cobst::WorkloadConfig cfg, const std::string& impl,
                      const std::string& range, bool ci, bool duration_set,
                      bool warmup_set, const std::string& csv) {
  const auto parsed = cobst::parse_impl(impl);
  if (!parsed) {
    std::cerr << "error: unknown --impl '" << impl
              << "' (expected co-bst or coarse-bst)\n";
    return 2;
  }
  cfg.impl = *parsed;
  cfg.key_range = cobst::parse_range(range);
  if (ci) {
    if (!duration_set) cfg.duration_ms = cobst::kCiDurationMs;
    if (!warmup_set) cfg.warmup_ms = cobst::kCiWarmupMs;
  }
  const cobst::BenchResult r = cobst::run_bench(cfg);
  std::cout << "impl=" << cobst::to_string(r.impl) << '\n'
            << "threads=" << r.threads << '\n'
            << "range=" << r.range << '\n'
            << "update_pct=" << r.update_pct << '\n'
            << "prefill_size=" << r.prefill_size << '\n'
            << "duration_ms=" << r.duration_ms << '\n'
            << "throughput_ops_s=" << r.throughput_ops_s << '\n'
            << "inserts=" << r.inserts << " successful=" << r.insert_successes
            << '\n'
            << "deletes=" << r.deletes << " successful=" << r.delete_successes
            << '\n'
            << "contains=" << r.contains << " hits=" << r.contains_hits << '\n'
            << "restarts=" << r.restarts << '\n';
  if (!csv.empty()) cobst::emit_csv({r}, csv);
  return 0;
}

int run_check_command(const std::string& path) {
  const cobst::History h = cobst::load_history_file(path);
  cobst::CheckerOptions options;
  options.max_operations = 32;
  const auto result = cobst::is_linearizable(h, options);
  std::cout << cobst::format_result(result);
  return result.linearizable ? 0 : 1;
}

int run_replay_command(const std::string& path, bool lenient) {
  const cobst::ScheduleScript script = cobst::load_script_file(path);
  cobst::RunOptions options;
  options.lenient = lenient;
  const cobst::RunReport report = cobst::run_script(script, options);
  std::cout << cobst::format_report(report);
  return report.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concurrent partially-external BST tools"};
  app.require_subcommand(1);

  cobst::WorkloadConfig cfg;
  std::string impl = "co-bst";
  std::string range = "2^15";
  std::string csv;
  bool ci = false;
  bool no_prefill = false;
  auto* bench = app.add_subcommand("bench", "Measure set throughput");
  bench->add_option("--impl", impl, "co-bst or coarse-bst");
  bench->add_option("--threads", cfg.threads, "Worker threads");
  bench->add_option("--range", range, "Key range, a number or 2^k");
  bench->add_option("--updates", cfg.update_pct, "Update percentage x");
  auto* duration =
      bench->add_option("--duration-ms", cfg.duration_ms, "Measured phase");
  auto* warmup = bench->add_option("--warmup-ms", cfg.warmup_ms, "Warmup");
  bench->add_option("--seed", cfg.seed, "Workload seed");
  bench->add_flag("--no-prefill", no_prefill, "Start from an empty set");
  bench->add_flag("--ci", ci, "Use the 1 s / 0.2 s CI timings");
  bench->add_option("--csv", csv, "Write the result as CSV");

  std::string history_path;
  auto* check = app.add_subcommand("check", "Check a history file");
  check->add_option("--history", history_path, "History file")->required();

  std::string script_path;
  auto* replay = app.add_subcommand("replay", "Replay a schedule script");
  replay->add_option("--script", script_path, "Script file")->required();
  bool lenient = false;
  replay->add_flag("--lenient", lenient,
                   "Skip directives naming blocked or finished threads");

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench->parsed()) {
      cfg.prefill = !no_prefill;
      return run_bench_command(cfg, impl, range, ci, duration->count() > 0,
                               warmup->count() > 0, csv);
    }
    if (check->parsed()) return run_check_command(history_path);
    if (replay->parsed()) return run_replay_command(script_path, lenient);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
