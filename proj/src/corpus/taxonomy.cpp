#include "scenehint/taxonomy.hpp"

#include "scenehint/error.hpp"
#include "scenehint/model.hpp"

namespace scenehint {

using nlohmann::json;

void CategoryTaxonomy::setParent(const std::string& category, const std::optional<std::string>& parent) {
  if (parent) {
    if (*parent == category) {
      throw Error(ErrorCode::InvalidInput, "taxonomy: '" + category + "' cannot be its own parent");
    }
    for (const auto& a : ancestors(*parent)) {
      if (a == category) {
        throw Error(ErrorCode::InvalidInput,
                    "taxonomy: linking '" + category + "' under '" + *parent + "' creates a cycle");
      }
    }
    if (parents_.find(*parent) == parents_.end()) parents_[*parent] = std::nullopt;
  }
  parents_[category] = parent;
}

std::optional<std::string> CategoryTaxonomy::parentOf(std::string_view category) const {
  auto it = parents_.find(std::string(category));
  if (it == parents_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> CategoryTaxonomy::ancestors(std::string_view category) const {
  std::vector<std::string> out;
  auto current = parentOf(category);
  while (current) {
    out.push_back(*current);
    if (out.size() > parents_.size()) break;  // unreachable for a validated taxonomy
    current = parentOf(*current);
  }
  return out;
}

bool CategoryTaxonomy::isSelfOrDescendant(std::string_view category, std::string_view ancestor) const {
  if (category == ancestor) return true;
  for (const auto& a : ancestors(category)) {
    if (a == ancestor) return true;
  }
  return false;
}

json CategoryTaxonomy::toJson() const {
  json parents = json::object();
  for (const auto& [c, p] : parents_) parents[c] = p ? json(*p) : json(nullptr);
  return {{"formatVersion", 1}, {"parents", parents}, {"noFrontCategories", noFront_}};
}

CategoryTaxonomy CategoryTaxonomy::fromJson(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Parse, "taxonomy: expected an object");
  auto version = j.find("formatVersion");
  if (version == j.end() || !version->is_number_integer()) {
    throw Error(ErrorCode::Parse, "taxonomy: missing integer formatVersion");
  }
  if (version->get<int>() != 1) {
    throw Error(ErrorCode::FormatVersion,
                "taxonomy: formatVersion " + std::to_string(version->get<int>()) + " is not supported (expected 1)");
  }
  CategoryTaxonomy t;
  if (auto it = j.find("parents"); it != j.end()) {
    if (!it->is_object()) throw Error(ErrorCode::Parse, "taxonomy: parents must be an object");
    // Insert roots first so setParent's cycle check sees complete chains.
    for (const auto& [c, p] : it->items()) {
      if (!p.is_null() && !p.is_string()) {
        throw Error(ErrorCode::Parse, "taxonomy: parent of '" + c + "' must be a string or null");
      }
      if (t.parents_.find(c) == t.parents_.end()) t.parents_[c] = std::nullopt;
    }
    for (const auto& [c, p] : it->items()) {
      if (p.is_string()) t.setParent(c, p.get<std::string>());
    }
  }
  if (auto it = j.find("noFrontCategories"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::Parse, "taxonomy: noFrontCategories must be an array");
    for (const auto& c : *it) {
      if (!c.is_string()) throw Error(ErrorCode::Parse, "taxonomy: noFrontCategories must hold strings");
      t.noFront_.insert(c.get<std::string>());
    }
  }
  return t;
}

bool categoryHasFront(std::string_view category, const CategoryTaxonomy& taxonomy, const ModelDb& models) {
  if (taxonomy.listedAsNoFront(category)) return false;
  for (const ModelMetadata* m : models.modelsInCategory(category)) {
    if (!m->hasSemanticFront) return false;
  }
  return true;
}

}  // namespace scenehint
