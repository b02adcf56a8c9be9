#pragma once

#include "json.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace scenehint {

class ModelDb;

/// Category hierarchy used for backoff, plus the categories whose models
/// have no meaningful front (round tables, plants, ...).
///
/// File format: {"formatVersion": 1, "parents": {"desk_lamp": "lamp", "lamp": null},
///               "noFrontCategories": ["round_table"]}
class CategoryTaxonomy {
 public:
  /// Throws Error(InvalidInput) if the link would create a cycle.
  void setParent(const std::string& category, const std::optional<std::string>& parent);
  void addNoFrontCategory(const std::string& category) { noFront_.insert(category); }

  std::optional<std::string> parentOf(std::string_view category) const;
  /// Ancestors from nearest to root; excludes `category` itself.
  std::vector<std::string> ancestors(std::string_view category) const;
  /// True if `category` is `ancestor` or lies below it.
  bool isSelfOrDescendant(std::string_view category, std::string_view ancestor) const;

  bool listedAsNoFront(std::string_view category) const { return noFront_.count(std::string(category)) != 0; }

  const std::map<std::string, std::optional<std::string>>& parents() const { return parents_; }
  const std::set<std::string>& noFrontCategories() const { return noFront_; }

  nlohmann::json toJson() const;
  /// Throws Error(Parse), Error(FormatVersion) or Error(InvalidInput) on cycles.
  static CategoryTaxonomy fromJson(const nlohmann::json& j);

  bool operator==(const CategoryTaxonomy&) const = default;

 private:
  std::map<std::string, std::optional<std::string>> parents_;
  std::set<std::string> noFront_;
};

/// A category has a semantic front unless the taxonomy lists it or any of its
/// models is annotated without one.
bool categoryHasFront(std::string_view category, const CategoryTaxonomy& taxonomy, const ModelDb& models);

}  // namespace scenehint
