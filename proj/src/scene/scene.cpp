#include "scenehint/scene.hpp"

#include "scenehint/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace scenehint {

const ModelInstance* Scene::find(std::string_view objectId) const {
  for (const auto& o : objects) {
    if (o.id == objectId) return &o;
  }
  return nullptr;
}

ModelInstance* Scene::find(std::string_view objectId) {
  for (auto& o : objects) {
    if (o.id == objectId) return &o;
  }
  return nullptr;
}

std::vector<const ModelInstance*> Scene::childrenOf(std::string_view parentId) const {
  std::set<std::string, std::less<>> childIds;
  for (const auto& [child, parent] : supportEdges) {
    if (parent == parentId && child != parentId) childIds.insert(child);
  }
  std::vector<const ModelInstance*> out;
  for (const auto& o : objects) {
    if (childIds.count(o.id) != 0) out.push_back(&o);
  }
  return out;
}

const ModelInstance* Scene::root() const {
  std::set<std::string, std::less<>> children;
  for (const auto& [child, parent] : supportEdges) children.insert(child);
  for (const auto& o : objects) {
    if (o.isArchitecture && children.count(o.id) == 0) return &o;
  }
  return nullptr;
}

std::string_view toString(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::Cycle: return "cycle";
    case ViolationKind::MultiParent: return "multi-parent";
    case ViolationKind::Orphan: return "orphan";
    case ViolationKind::MissingEndpoint: return "missing-endpoint";
    case ViolationKind::RootCount: return "root-count";
    case ViolationKind::ParentMismatch: return "parent-mismatch";
    case ViolationKind::DuplicateId: return "duplicate-id";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Support tree validation

namespace {

// Tarjan's strongly connected components over child -> parent edges.
class CycleFinder {
 public:
  explicit CycleFinder(const std::map<std::string, std::vector<std::string>>& graph) : graph_(graph) {}

  std::vector<std::vector<std::string>> cycles() {
    for (const auto& [node, _] : graph_) {
      if (index_.count(node) == 0) visit(node);
    }
    return cycles_;
  }

 private:
  void visit(const std::string& node) {
    index_[node] = low_[node] = counter_++;
    stack_.push_back(node);
    onStack_.insert(node);
    bool selfLoop = false;
    if (auto it = graph_.find(node); it != graph_.end()) {
      for (const auto& next : it->second) {
        if (next == node) selfLoop = true;
        if (index_.count(next) == 0) {
          visit(next);
          low_[node] = std::min(low_[node], low_[next]);
        } else if (onStack_.count(next) != 0) {
          low_[node] = std::min(low_[node], index_[next]);
        }
      }
    }
    if (low_[node] == index_[node]) {
      std::vector<std::string> component;
      std::string top;
      do {
        top = stack_.back();
        stack_.pop_back();
        onStack_.erase(top);
        component.push_back(top);
      } while (top != node);
      if (component.size() > 1 || selfLoop) {
        std::sort(component.begin(), component.end());
        cycles_.push_back(std::move(component));
      }
    }
  }

  const std::map<std::string, std::vector<std::string>>& graph_;
  std::map<std::string, int> index_;
  std::map<std::string, int> low_;
  std::vector<std::string> stack_;
  std::set<std::string> onStack_;
  std::vector<std::vector<std::string>> cycles_;
  int counter_ = 0;
};

std::string joinIds(const std::vector<std::string>& ids, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i != 0) out += sep;
    out += ids[i];
  }
  return out;
}

}  // namespace

std::vector<TreeViolation> validateSupportTree(const Scene& scene) {
  std::vector<TreeViolation> violations;
  if (scene.objects.empty() && scene.supportEdges.empty()) return violations;

  std::map<std::string, const ModelInstance*> byId;
  for (const auto& o : scene.objects) {
    if (!byId.emplace(o.id, &o).second) {
      violations.push_back({ViolationKind::DuplicateId, {o.id}, "duplicate object id '" + o.id + "'"});
    }
  }

  std::map<std::string, std::vector<std::string>> parents;
  for (const auto& [child, parent] : scene.supportEdges) {
    const bool childOk = byId.count(child) != 0;
    const bool parentOk = byId.count(parent) != 0;
    if (!childOk || !parentOk) {
      violations.push_back({ViolationKind::MissingEndpoint,
                            {child, parent},
                            "support edge (" + child + " -> " + parent + ") references a missing object"});
      continue;
    }
    auto& list = parents[child];
    if (std::find(list.begin(), list.end(), parent) == list.end()) list.push_back(parent);
  }

  for (const auto& [child, list] : parents) {
    if (list.size() > 1) {
      std::vector<std::string> ids = {child};
      ids.insert(ids.end(), list.begin(), list.end());
      violations.push_back({ViolationKind::MultiParent, ids,
                            "object '" + child + "' has " + std::to_string(list.size()) +
                                " parents: " + joinIds(list, ", ")});
    }
  }

  for (auto& cycle : CycleFinder(parents).cycles()) {
    violations.push_back(
        {ViolationKind::Cycle, cycle, "support cycle through: " + joinIds(cycle, " -> ")});
  }

  std::vector<std::string> roots;
  for (const auto& o : scene.objects) {
    auto it = parents.find(o.id);
    const bool hasParent = it != parents.end();
    if (!hasParent) {
      if (o.isArchitecture && !o.parentId) {
        roots.push_back(o.id);
      } else {
        violations.push_back({ViolationKind::Orphan, {o.id},
                              "object '" + o.id + "' has no support edge" +
                                  (o.parentId ? " (parentId '" + *o.parentId + "')" : std::string())});
      }
      continue;
    }
    if (o.parentId && it->second.size() == 1 && it->second.front() != *o.parentId) {
      violations.push_back({ViolationKind::ParentMismatch, {o.id, *o.parentId, it->second.front()},
                            "object '" + o.id + "' has parentId '" + *o.parentId +
                                "' but its support edge points at '" + it->second.front() + "'"});
    }
  }
  if (roots.size() != 1) {
    violations.push_back({ViolationKind::RootCount, roots,
                          "expected exactly one architecture root, found " +
                              std::to_string(roots.size()) +
                              (roots.empty() ? std::string() : ": " + joinIds(roots, ", "))});
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Boxes and axes

OrientedBox instanceBox(const ModelInstance& instance, const ModelMetadata& meta) {
  const Mat3 linear = instance.transform.linear();
  const Mat3 align = meta.alignment();
  const Vec3 half = meta.canonicalHalfExtents();
  OrientedBox box;
  box.center = instance.transform.translation();
  for (int k = 0; k < 3; ++k) {
    const Vec3 v = linear * align.row(k).transpose();
    const double len = v.norm();
    box.axes[static_cast<std::size_t>(k)] = v / len;
    box.halfExtents[k] = half[k] * len;
  }
  return box;
}

PoseAxes instanceAxes(const ModelInstance& instance, const ModelMetadata& meta) {
  const Mat3 linear = instance.transform.linear();
  PoseAxes axes;
  axes.center = instance.transform.translation();
  axes.front = (linear * meta.front).normalized();
  axes.up = (linear * meta.up).normalized();
  return axes;
}

// ---------------------------------------------------------------------------
// Raycast

namespace {

struct SlabResult {
  double tNear = -std::numeric_limits<double>::infinity();
  double tFar = std::numeric_limits<double>::infinity();
  AttachmentFace nearFace = AttachmentFace::Bottom;
  AttachmentFace farFace = AttachmentFace::Top;
};

std::optional<SlabResult> slabIntersect(const Ray& ray, const OrientedBox& box) {
  SlabResult r;
  const Vec3 rel = ray.origin - box.center;
  for (int k = 0; k < 3; ++k) {
    const Vec3& axis = box.axes[static_cast<std::size_t>(k)];
    const double o = rel.dot(axis);
    const double d = ray.direction.dot(axis);
    const double h = box.halfExtents[k];
    if (std::abs(d) < 1e-15) {
      if (std::abs(o) > h) return std::nullopt;
      continue;
    }
    double t0 = (-h - o) / d;  // plane of the negative face
    double t1 = (h - o) / d;
    AttachmentFace f0 = faceFromAxis(k, false);
    AttachmentFace f1 = faceFromAxis(k, true);
    if (t0 > t1) {
      std::swap(t0, t1);
      std::swap(f0, f1);
    }
    if (t0 > r.tNear) {
      r.tNear = t0;
      r.nearFace = f0;
    }
    if (t1 < r.tFar) {
      r.tFar = t1;
      r.farFace = f1;
    }
    if (r.tNear > r.tFar) return std::nullopt;
  }
  return r;
}

}  // namespace

std::optional<RayHit> raycastScene(const Ray& ray, const Scene& scene, const ModelDb& models) {
  if (!ray.direction.allFinite() || !isUnit(ray.direction)) {
    throw Error(ErrorCode::InvalidInput, "ray direction must be unit length");
  }
  std::optional<RayHit> best;
  for (const auto& instance : scene.objects) {
    const ModelMetadata* meta = models.find(instance.modelId);
    if (meta == nullptr) continue;
    const OrientedBox box = instanceBox(instance, *meta);
    const auto slab = slabIntersect(ray, box);
    if (!slab) continue;

    double t = 0.0;
    Vec3 normal;
    if (instance.isArchitecture) {
      if (slab->tFar < 0.0) continue;
      t = slab->tFar;
      normal = -box.faceNormal(slab->farFace);
    } else {
      if (slab->tNear < 0.0) continue;
      t = slab->tNear;
      normal = box.faceNormal(slab->nearFace);
    }
    if (!best || t < best->distance) {
      best = RayHit{ray.origin + t * ray.direction, normal.normalized(), instance.id, t};
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Placement

namespace {

Mat3 rotationBetween(const Vec3& from, const Vec3& to) {
  const double c = std::clamp(from.dot(to), -1.0, 1.0);
  if (c > 1.0 - 1e-12) return Mat3::Identity();
  if (c < -1.0 + 1e-12) {
    // Half turn; keep the canonical up axis fixed whenever possible.
    const Vec3 axis = std::abs(from.z()) < 0.5 ? Vec3::UnitZ() : Vec3::UnitY();
    return Eigen::AngleAxisd(kPi, axis).toRotationMatrix();
  }
  const Vec3 axis = from.cross(to).normalized();
  return Eigen::AngleAxisd(std::acos(c), axis).toRotationMatrix();
}

}  // namespace

Transform composePlacement(const Vec3& anchor, const Vec3& surfaceNormal, AttachmentFace face,
                           double alpha, const ModelMetadata& meta) {
  meta.validate();
  if (!anchor.allFinite()) throw Error(ErrorCode::InvalidInput, "placement anchor must be finite");
  if (!surfaceNormal.allFinite() || !isUnit(surfaceNormal)) {
    throw Error(ErrorCode::InvalidInput, "surface normal must be unit length");
  }
  if (!std::isfinite(alpha)) throw Error(ErrorCode::InvalidInput, "alpha must be finite");

  const Vec3 n = surfaceNormal.normalized();
  const Mat3 attach = rotationBetween(canonicalFaceNormal(face), -n);
  const Mat3 spin = Eigen::AngleAxisd(wrapAngle(alpha), n).toRotationMatrix();
  const Mat3 rotation = spin * attach * meta.alignment();
  const double halfDepth = meta.canonicalHalfExtents()[faceAxis(face)];
  return Transform::fromRotationTranslation(rotation, anchor + n * halfDepth);
}

}  // namespace scenehint
