#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>
#include <thread>

#include "cobst/history.hpp"

using namespace cobst;

namespace {

History sample() {
  History h;
  h.events = {{1, 0, EventKind::Invoke, OpKind::Insert, 5, std::nullopt},
              {2, 1, EventKind::Invoke, OpKind::Contains, 5, std::nullopt},
              {3, 0, EventKind::Respond, OpKind::Insert, 5, true},
              {4, 1, EventKind::Respond, OpKind::Contains, 5, false},
              {5, 1, EventKind::Invoke, OpKind::Delete, 7, std::nullopt}};
  return h;
}

History parse(const std::string& text) {
  std::istringstream is(text);
  return read_history(is);
}

}  // namespace

TEST(History, FormatEvent) {
  EXPECT_EQ(format_event(sample().events[0]), "1 0 INV INSERT 5");
  EXPECT_EQ(format_event(sample().events[3]), "4 1 RES CONTAINS 5 false");
}

TEST(History, WriteReadRoundTrip) {
  std::ostringstream os;
  write_history(os, sample());
  EXPECT_EQ(parse(os.str()), sample());
}

TEST(History, SkipsCommentsAndBlankLines) {
  const History h = parse("# header\n\n  \n1 0 INV CONTAINS 3\n  # indented\n"
                          "2 0 RES CONTAINS 3 true\n");
  ASSERT_EQ(h.events.size(), 2u);
  EXPECT_EQ(h.events[1].ret, std::optional<bool>(true));
}

TEST(History, MalformedLinesReportLineNumber) {
  const char* bad[] = {
      "1 0 INV INSERT\n",           // missing key
      "1 0 CALL INSERT 3\n",        // bad kind
      "1 0 INV UPSERT 3\n",         // bad op
      "1 0 RES INSERT 3 maybe\n",   // bad ret
      "1 0 RES INSERT 3 true x\n",  // trailing
      "x 0 INV INSERT 3\n",
  };
  for (const char* text : bad) {
    try {
      (void)parse(std::string("# c\n") + text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const HistoryError& e) {
      EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos)
          << e.what();
    }
  }
}

TEST(History, WellFormed) {
  EXPECT_NO_THROW(check_well_formed(sample()));
  EXPECT_NO_THROW(check_well_formed(History{}));
}

TEST(History, WellFormedRejectsNonIncreasingSeq) {
  History h = sample();
  h.events[2].seq = 2;
  EXPECT_THROW(check_well_formed(h), HistoryError);
}

TEST(History, WellFormedRejectsDoubleInvoke) {
  const History h = parse("1 0 INV INSERT 1\n2 0 INV INSERT 2\n");
  EXPECT_THROW(check_well_formed(h), HistoryError);
}

TEST(History, WellFormedRejectsOrphanResponse) {
  EXPECT_THROW(check_well_formed(parse("1 0 RES INSERT 1 true\n")),
               HistoryError);
}

TEST(History, WellFormedRejectsMismatchedResponse) {
  EXPECT_THROW(
      check_well_formed(parse("1 0 INV INSERT 1\n2 0 RES DELETE 1 true\n")),
      HistoryError);
  EXPECT_THROW(
      check_well_formed(parse("1 0 INV INSERT 1\n2 0 RES INSERT 2 true\n")),
      HistoryError);
}

TEST(History, WellFormedRejectsMissingOrExtraReturn) {
  EXPECT_THROW(check_well_formed(parse("1 0 INV INSERT 1\n2 0 RES INSERT 1\n")),
               HistoryError);
  EXPECT_THROW(check_well_formed(parse("1 0 INV INSERT 1 true\n")),
               HistoryError);
}

TEST(History, MissingFile) {
  EXPECT_THROW((void)load_history_file("/nonexistent/dir/h.history"),
               HistoryError);
}

TEST(History, OpKindNames) {
  for (OpKind op : {OpKind::Insert, OpKind::Delete, OpKind::Contains})
    EXPECT_EQ(parse_op_kind(to_string(op)), op);
  EXPECT_FALSE(parse_op_kind("insert"));
}

TEST(HistoryRecorder, MergesThreadsInSeqOrder) {
  constexpr ThreadId kThreads = 4;
  constexpr int kOps = 2000;
  HistoryRecorder rec(kThreads);
  std::vector<std::thread> ts;
  for (ThreadId t = 0; t < kThreads; ++t)
    ts.emplace_back([&rec, t] {
      for (int i = 0; i < kOps; ++i) {
        rec.invoke(t, OpKind::Insert, i);
        rec.respond(t, OpKind::Insert, i, i % 2 == 0);
      }
    });
  for (auto& t : ts) t.join();
  const History h = rec.history();
  ASSERT_EQ(h.events.size(), std::size_t{kThreads} * kOps * 2);
  EXPECT_NO_THROW(check_well_formed(h));
  for (std::size_t i = 0; i < h.events.size(); ++i)
    EXPECT_EQ(h.events[i].seq, i + 1);
}

TEST(HistoryRecorder, RejectsThreadBeyondCapacity) {
  HistoryRecorder rec(2);
  EXPECT_THROW(rec.invoke(2, OpKind::Insert, 1), HistoryError);
}
