#pragma once

#include "scenehint/geometry.hpp"
#include "scenehint/model.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scenehint {

struct ModelInstance {
  std::string id;
  std::string modelId;
  Transform transform;
  std::optional<std::string> parentId;
  bool isArchitecture = false;
};

struct Scene {
  std::string id;
  std::string sceneType;
  std::vector<ModelInstance> objects;
  /// (childId, parentId)
  std::vector<std::pair<std::string, std::string>> supportEdges;

  const ModelInstance* find(std::string_view objectId) const;
  ModelInstance* find(std::string_view objectId);

  /// Objects whose support edge points at `parentId`, in object order.
  std::vector<const ModelInstance*> childrenOf(std::string_view parentId) const;
  /// The architecture object without a parent, if any.
  const ModelInstance* root() const;
};

enum class ViolationKind {
  Cycle,
  MultiParent,
  Orphan,
  MissingEndpoint,
  RootCount,
  ParentMismatch,
  DuplicateId,
};

std::string_view toString(ViolationKind kind);

struct TreeViolation {
  ViolationKind kind;
  std::vector<std::string> objectIds;
  std::string message;
};

/// Empty iff supportEdges form one tree rooted at the architecture root.
/// Cycles are reported once each (nodes hanging below a cycle are not
/// reported again as orphans).
std::vector<TreeViolation> validateSupportTree(const Scene& scene);

/// World-space box of an instance, built from the model's canonical extents.
OrientedBox instanceBox(const ModelInstance& instance, const ModelMetadata& meta);

/// Center, front and up of an instance in world space.
PoseAxes instanceAxes(const ModelInstance& instance, const ModelMetadata& meta);

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
};

struct RayHit {
  Vec3 point;
  Vec3 normal;
  std::string objectId;
  double distance = 0.0;
};

/// Nearest hit against the instances' oriented boxes. Furniture boxes are
/// solid and only hit on entry faces; architecture boxes are seen from the
/// inside (exit face, inward normal). Instances with unknown models are
/// skipped. Throws Error(InvalidInput) for a non-unit direction.
std::optional<RayHit> raycastScene(const Ray& ray, const Scene& scene, const ModelDb& models);

/// Transform placing `meta` so that face `face` sits on a surface at `anchor`
/// with normal `surfaceNormal`, spun by `alpha` about that normal.
Transform composePlacement(const Vec3& anchor, const Vec3& surfaceNormal, AttachmentFace face,
                           double alpha, const ModelMetadata& meta);

}  // namespace scenehint
