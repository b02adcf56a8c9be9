#pragma once

#include "json.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace scenehint {

using Rational = boost::multiprecision::cpp_rational;

/// One choice a user made after a suggestion query.
struct SelectionRecord {
  std::string queryId;
  std::vector<std::string> rankedCategories;
  std::string selectedCategory;
  bool usedTextSearch = false;
};

struct LogSelections {
  std::vector<SelectionRecord> records;
  std::size_t textQueryCount = 0;
  std::size_t skippedLines = 0;
  std::vector<std::string> warnings;
};

/// Reads an interaction log (one {ts, sessionId, op, payload} object per
/// line). Selections come from "select" events and from "insert" events that
/// carry a queryId; each query contributes at most one selection. A
/// text-search selection without a queryId is ranked against the session's
/// most recent suggestion list. Malformed lines are skipped and counted.
LogSelections selectionsFromLog(std::istream& in);

struct MrrSummary {
  Rational mrr = 0;
  std::size_t ranked = 0;    // selections that entered the mean
  std::size_t excluded = 0;  // text-search selections absent from the list
  std::array<std::size_t, 4> rankBuckets{};  // ranks 1, 2, 3, 4+ (absent counts as 4+)

  double value() const { return static_cast<double>(mrr); }
};

/// 1 / rank of the selected category, or 0 when it is not in the list.
Rational reciprocalRank(const SelectionRecord& record);

/// includeTextSearch = true ranks text-search selections by their position in
/// the suggestion list (excluded if absent); false drops them entirely.
MrrSummary meanReciprocalRank(const std::vector<SelectionRecord>& records, bool includeTextSearch);

struct ReferenceMrr {
  const char* condition;
  double mrr;
};

/// Published study values; they come from human participants and are shown
/// for orientation only.
inline constexpr std::array<ReferenceMrr, 3> kReferenceMrr = {{{"none", 0.353}, {"basic", 0.785}, {"full", 0.769}}};

nlohmann::json evalReportJson(const LogSelections& selections);

}  // namespace scenehint
