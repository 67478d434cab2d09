#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "cobst/schedule.hpp"

namespace cobst {

namespace {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::Insert:
      return "insert";
    case OpKind::Delete:
      return "delete";
    case OpKind::Contains:
      return "contains";
  }
  return "?";
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void fail(std::size_t lineno, const std::string& msg) {
  throw ScriptError("line " + std::to_string(lineno) + ": " + msg);
}

template <typename T>
T parse_number(std::string_view text, std::size_t lineno, const char* what) {
  T value{};
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    fail(lineno, std::string("bad ") + what + " '" + std::string(text) + "'");
  return value;
}

ScriptOp parse_op(std::string_view tok, std::size_t lineno) {
  const auto open = tok.find('(');
  if (open == std::string_view::npos || tok.back() != ')')
    fail(lineno, "expected <op>(<key>), got '" + std::string(tok) + "'");
  const std::string_view name = tok.substr(0, open);
  ScriptOp op;
  if (name == "insert")
    op.op = OpKind::Insert;
  else if (name == "delete")
    op.op = OpKind::Delete;
  else if (name == "contains")
    op.op = OpKind::Contains;
  else
    fail(lineno, "unknown operation '" + std::string(name) + "'");
  op.key = parse_number<Key>(tok.substr(open + 1, tok.size() - open - 2),
                             lineno, "key");
  return op;
}

}  // namespace

void validate_script(const ScheduleScript& script) {
  for (Key k : script.setup)
    if (!is_client_key(k))
      throw ScriptError("setup key " + std::to_string(k) + " is reserved");
  std::unordered_set<ThreadId> ids;
  for (const auto& t : script.threads) {
    if (!ids.insert(t.id).second)
      throw ScriptError("thread " + std::to_string(t.id) + " defined twice");
    if (t.ops.empty())
      throw ScriptError("thread " + std::to_string(t.id) + " has no operations");
    for (const auto& op : t.ops)
      if (!is_client_key(op.key))
        throw ScriptError("thread " + std::to_string(t.id) +
                          " uses reserved key " + std::to_string(op.key));
  }
  if (script.threads.size() > 32)
    throw ScriptError("at most 32 threads per script");
  for (const auto& s : script.schedule) {
    if (!ids.count(s.thread))
      throw ScriptError("schedule names undefined thread " +
                        std::to_string(s.thread));
    if (s.count && *s.count == 0)
      throw ScriptError("schedule step count for thread " +
                        std::to_string(s.thread) + " must be positive");
  }
}

std::string format_script(const ScheduleScript& script) {
  std::ostringstream os;
  os << "setup:";
  for (Key k : script.setup) os << ' ' << k;
  os << '\n';
  for (const auto& t : script.threads) {
    os << "thread " << t.id << ':';
    for (const auto& op : t.ops) os << ' ' << op_name(op.op) << '(' << op.key << ')';
    os << '\n';
  }
  os << "schedule:";
  for (const auto& s : script.schedule) {
    os << ' ' << s.thread << ':';
    if (s.count)
      os << *s.count;
    else
      os << '*';
  }
  os << '\n';
  return os.str();
}

ScheduleScript parse_script(std::string_view text) {
  ScheduleScript script;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto colon = line.find(':');
    if (colon == std::string_view::npos) fail(lineno, "missing ':'");
    const std::string_view head = trim(line.substr(0, colon));
    const std::string_view body = line.substr(colon + 1);
    const auto words = split_ws(body);

    if (head == "setup") {
      for (auto w : words) script.setup.push_back(parse_number<Key>(w, lineno, "key"));
    } else if (head.substr(0, 6) == "thread") {
      ThreadProgram t;
      t.id = parse_number<ThreadId>(trim(head.substr(6)), lineno, "thread id");
      for (auto w : words) t.ops.push_back(parse_op(w, lineno));
      script.threads.push_back(std::move(t));
    } else if (head == "schedule") {
      for (auto w : words) {
        const auto c = w.find(':');
        if (c == std::string_view::npos)
          fail(lineno, "expected <id>:<n>, got '" + std::string(w) + "'");
        ScheduleStep s;
        s.thread = parse_number<ThreadId>(w.substr(0, c), lineno, "thread id");
        const std::string_view n = w.substr(c + 1);
        if (n != "*") s.count = parse_number<std::uint32_t>(n, lineno, "step count");
        script.schedule.push_back(s);
      }
    } else {
      fail(lineno, "unknown directive '" + std::string(head) + "'");
    }
  }
  try {
    validate_script(script);
  } catch (const ScriptError& e) {
    throw ScriptError(std::string("invalid script: ") + e.what());
  }
  return script;
}

ScheduleScript load_script_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScriptError("cannot open script file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_script(buf.str());
}

ScheduleScript random_schedule(std::uint64_t seed, std::size_t threads,
                               std::size_t ops, Key key_range) {
  if (threads == 0 || ops == 0 || key_range <= 0)
    throw ScriptError("random_schedule parameters must be positive");
  std::mt19937_64 rng(seed);
  auto below = [&](std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng);
  };

  ScheduleScript script;
  for (Key k = 0; k < key_range; ++k)
    if (below(2) == 0) script.setup.push_back(k);
  for (std::size_t t = 0; t < threads; ++t) {
    ThreadProgram p;
    p.id = static_cast<ThreadId>(t + 1);
    for (std::size_t i = 0; i < ops; ++i) {
      const auto kind = static_cast<OpKind>(below(3));
      p.ops.push_back({kind, static_cast<Key>(below(
                                 static_cast<std::uint64_t>(key_range)))});
    }
    script.threads.push_back(std::move(p));
  }
  // Roughly as many steps as the operations need; leftovers are drained.
  const std::size_t budget = threads * ops * 10;
  for (std::size_t used = 0; used < budget;) {
    ScheduleStep s;
    s.thread = static_cast<ThreadId>(below(threads) + 1);
    s.count = static_cast<std::uint32_t>(below(4) + 1);
    used += *s.count;
    script.schedule.push_back(s);
  }
  return script;
}

}  // namespace cobst
