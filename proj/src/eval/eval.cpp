#include "scenehint/eval.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace scenehint {

using nlohmann::json;

namespace {

struct SessionState {
  std::map<std::string, std::vector<std::string>> lists;  // queryId -> ranked categories
  std::vector<std::string> lastList;
  bool hasList = false;
  std::set<std::string> selectedQueries;
};

std::vector<std::string> stringList(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("rankedCategories must be an array");
  std::vector<std::string> out;
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return out;
}

std::optional<std::string> optionalString(const json& payload, const char* name) {
  auto it = payload.find(name);
  if (it == payload.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

LogSelections selectionsFromLog(std::istream& in) {
  LogSelections out;
  std::map<std::string, SessionState> sessions;
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json event = json::parse(line);
      const std::string op = event.at("op").get<std::string>();
      const std::string sessionId = event.at("sessionId").get<std::string>();
      const json& payload = event.at("payload");
      if (!payload.is_object()) throw std::invalid_argument("payload must be an object");
      SessionState& session = sessions[sessionId];

      if (op == "suggest") {
        auto list = stringList(payload.at("rankedCategories"));
        session.lists[payload.at("queryId").get<std::string>()] = list;
        session.lastList = std::move(list);
        session.hasList = true;
      } else if (op == "search") {
        ++out.textQueryCount;
      } else if (op == "select" || op == "insert") {
        const auto queryId = optionalString(payload, "queryId");
        bool usedText = false;
        if (op == "select") {
          auto it = payload.find("usedTextSearch");
          usedText = it != payload.end() && it->get<bool>();
        } else {
          usedText = optionalString(payload, "source").value_or("suggestion") == "search";
        }
        // Plain inserts without a query (e.g. replayed edits) are not selections.
        if (op == "insert" && !queryId && !usedText) continue;
        if (queryId && session.selectedQueries.count(*queryId) != 0) continue;

        SelectionRecord record;
        record.selectedCategory = payload.at("category").get<std::string>();
        if (record.selectedCategory.empty()) throw std::invalid_argument("empty selected category");
        record.usedTextSearch = usedText;
        if (queryId) {
          auto list = session.lists.find(*queryId);
          if (list == session.lists.end()) throw std::invalid_argument("selection refers to unknown query " + *queryId);
          record.queryId = *queryId;
          record.rankedCategories = list->second;
          session.selectedQueries.insert(*queryId);
        } else if (session.hasList) {
          record.rankedCategories = session.lastList;
        }
        out.records.push_back(std::move(record));
      }
    } catch (const std::exception& e) {
      ++out.skippedLines;
      out.warnings.push_back("line " + std::to_string(lineNo) + ": " + e.what());
    }
  }
  return out;
}

Rational reciprocalRank(const SelectionRecord& record) {
  const auto& list = record.rankedCategories;
  auto it = std::find(list.begin(), list.end(), record.selectedCategory);
  if (it == list.end()) return Rational(0);
  return Rational(1, static_cast<long>(it - list.begin()) + 1);
}

MrrSummary meanReciprocalRank(const std::vector<SelectionRecord>& records, bool includeTextSearch) {
  MrrSummary summary;
  Rational total = 0;
  for (const auto& r : records) {
    const auto& list = r.rankedCategories;
    auto it = std::find(list.begin(), list.end(), r.selectedCategory);
    if (r.usedTextSearch) {
      if (!includeTextSearch) continue;
      if (it == list.end()) {
        ++summary.excluded;
        continue;
      }
    }
    const std::size_t rank = it == list.end() ? 0 : static_cast<std::size_t>(it - list.begin()) + 1;
    total += reciprocalRank(r);
    ++summary.ranked;
    ++summary.rankBuckets[rank == 0 ? 3 : std::min<std::size_t>(rank, 4) - 1];
  }
  if (summary.ranked > 0) summary.mrr = total / static_cast<long>(summary.ranked);
  return summary;
}

namespace {

json summaryJson(const MrrSummary& s) {
  return {{"mrr", s.value()},
          {"mrrExact", s.mrr.str()},
          {"selections", s.ranked},
          {"excludedTextSearch", s.excluded},
          {"rankDistribution", {{"1", s.rankBuckets[0]}, {"2", s.rankBuckets[1]}, {"3", s.rankBuckets[2]}, {"4+", s.rankBuckets[3]}}}};
}

}  // namespace

json evalReportJson(const LogSelections& selections) {
  json reference = json::object();
  for (const auto& r : kReferenceMrr) reference[r.condition] = r.mrr;
  return {{"includingTextSearch", summaryJson(meanReciprocalRank(selections.records, true))},
          {"suggestionsOnly", summaryJson(meanReciprocalRank(selections.records, false))},
          {"textQueryCount", selections.textQueryCount},
          {"skippedLines", selections.skippedLines},
          {"referenceMrr", {{"values", reference}, {"reproducible", false}}}};
}

}  // namespace scenehint
