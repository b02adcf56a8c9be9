#pragma once

#include "scenehint/geometry.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scenehint {

enum class ShapeClass { Blocky, Flat, Thin };

std::string_view toString(ShapeClass shape);
ShapeClass parseShapeClass(std::string_view name);

/// Counts extents below 15% of the longest one: two small axes is a stick
/// (thin), one is a plate (flat), none is blocky.
ShapeClass classifyShape(const Vec3& bboxDims);

struct ModelMetadata {
  std::string modelId;
  std::string category;
  Vec3 up = Vec3::UnitZ();
  Vec3 front = Vec3::UnitY();
  Vec3 bboxDims = Vec3::Ones();
  bool hasSemanticFront = true;
  std::string name;
  std::vector<std::string> tags;
  std::string description;

  /// Throws Error(InvalidInput) if up/front are not orthonormal or a dim is <= 0.
  void validate() const;

  ShapeClass shapeClass() const { return classifyShape(bboxDims); }

  /// Rotation taking model-local coordinates to the canonical frame
  /// (rows: right = front x up, front, up).
  Mat3 alignment() const;

  /// Box half-extents along the canonical axes.
  Vec3 canonicalHalfExtents() const;
};

/// Model database keyed by modelId. Iteration is in modelId order.
class ModelDb {
 public:
  ModelDb() = default;
  explicit ModelDb(std::vector<ModelMetadata> models);

  void add(ModelMetadata model);

  const ModelMetadata* find(std::string_view modelId) const;
  const ModelMetadata& at(std::string_view modelId) const;

  const std::map<std::string, ModelMetadata, std::less<>>& models() const { return models_; }
  bool empty() const { return models_.empty(); }
  std::size_t size() const { return models_.size(); }

  /// Sorted distinct categories.
  std::vector<std::string> categories() const;
  /// Models of one category in modelId order.
  std::vector<const ModelMetadata*> modelsInCategory(std::string_view category) const;
  /// Smallest modelId of the category, or nullptr.
  const ModelMetadata* representative(std::string_view category) const;

 private:
  std::map<std::string, ModelMetadata, std::less<>> models_;
};

}  // namespace scenehint
