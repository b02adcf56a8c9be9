#include "scenehint/model.hpp"

#include "scenehint/error.hpp"

#include <algorithm>
#include <cmath>

namespace scenehint {

std::string_view toString(ShapeClass shape) {
  switch (shape) {
    case ShapeClass::Blocky: return "blocky";
    case ShapeClass::Flat: return "flat";
    case ShapeClass::Thin: return "thin";
  }
  return "blocky";
}

ShapeClass parseShapeClass(std::string_view name) {
  if (name == "blocky") return ShapeClass::Blocky;
  if (name == "flat") return ShapeClass::Flat;
  if (name == "thin") return ShapeClass::Thin;
  throw Error(ErrorCode::Parse, "unknown shape class '" + std::string(name) + "'");
}

ShapeClass classifyShape(const Vec3& bboxDims) {
  constexpr double kSmallRatio = 0.15;
  const double longest = bboxDims.maxCoeff();
  if (!(longest > 0.0)) return ShapeClass::Blocky;
  int small = 0;
  for (int i = 0; i < 3; ++i) {
    if (bboxDims[i] / longest < kSmallRatio) ++small;
  }
  if (small >= 2) return ShapeClass::Thin;
  if (small == 1) return ShapeClass::Flat;
  return ShapeClass::Blocky;
}

void ModelMetadata::validate() const {
  if (modelId.empty()) throw Error(ErrorCode::InvalidInput, "model has empty modelId");
  if (category.empty()) {
    throw Error(ErrorCode::InvalidInput, "model '" + modelId + "' has empty category");
  }
  if (!up.allFinite() || !front.allFinite() || !isUnit(up) || !isUnit(front)) {
    throw Error(ErrorCode::InvalidInput, "model '" + modelId + "': up/front must be unit vectors");
  }
  if (std::abs(up.dot(front)) > kUnitTolerance) {
    throw Error(ErrorCode::InvalidInput, "model '" + modelId + "': up and front must be orthogonal");
  }
  if (!bboxDims.allFinite() || !(bboxDims.minCoeff() > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "model '" + modelId + "': bboxDims must be positive");
  }
}

Mat3 ModelMetadata::alignment() const {
  const Vec3 f = front.normalized();
  const Vec3 u = up.normalized();
  Mat3 a;
  a.row(0) = f.cross(u).normalized().transpose();
  a.row(1) = f.transpose();
  a.row(2) = u.transpose();
  return a;
}

Vec3 ModelMetadata::canonicalHalfExtents() const {
  const Mat3 a = alignment();
  return 0.5 * (a.cwiseAbs() * bboxDims);
}

// ---------------------------------------------------------------------------

ModelDb::ModelDb(std::vector<ModelMetadata> models) {
  for (auto& m : models) add(std::move(m));
}

void ModelDb::add(ModelMetadata model) {
  model.validate();
  const std::string id = model.modelId;
  if (!models_.emplace(id, std::move(model)).second) {
    throw Error(ErrorCode::InvalidInput, "duplicate modelId '" + id + "'");
  }
}

const ModelMetadata* ModelDb::find(std::string_view modelId) const {
  auto it = models_.find(modelId);
  return it == models_.end() ? nullptr : &it->second;
}

const ModelMetadata& ModelDb::at(std::string_view modelId) const {
  const ModelMetadata* m = find(modelId);
  if (m == nullptr) throw Error(ErrorCode::NotFound, "unknown modelId '" + std::string(modelId) + "'");
  return *m;
}

std::vector<std::string> ModelDb::categories() const {
  std::vector<std::string> out;
  for (const auto& [id, m] : models_) out.push_back(m.category);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<const ModelMetadata*> ModelDb::modelsInCategory(std::string_view category) const {
  std::vector<const ModelMetadata*> out;
  for (const auto& [id, m] : models_) {
    if (m.category == category) out.push_back(&m);
  }
  return out;
}

const ModelMetadata* ModelDb::representative(std::string_view category) const {
  for (const auto& [id, m] : models_) {
    if (m.category == category) return &m;
  }
  return nullptr;
}

}  // namespace scenehint
