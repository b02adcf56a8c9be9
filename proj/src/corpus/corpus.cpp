#include "scenehint/corpus.hpp"

#include "scenehint/error.hpp"
#include "scenehint/scene_io.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

namespace scenehint {

namespace fs = std::filesystem;

std::string_view toString(Relationship r) {
  return r == Relationship::Sibling ? "Sibling" : "ChildParent";
}

Relationship parseRelationship(std::string_view name) {
  if (name == "Sibling") return Relationship::Sibling;
  if (name == "ChildParent") return Relationship::ChildParent;
  throw Error(ErrorCode::Parse, "unknown relationship '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Loading

void validateScene(const Scene& scene, const ModelDb& models, const std::string& source) {
  for (const auto& o : scene.objects) {
    if (models.find(o.modelId) == nullptr) {
      throw Error(ErrorCode::Validation, source + ": object '" + o.id + "' references unknown modelId '" +
                                             o.modelId + "'");
    }
  }
  const auto violations = validateSupportTree(scene);
  if (!violations.empty()) {
    std::string msg = source + ": support tree invalid:";
    for (const auto& v : violations) msg += "\n  [" + std::string(toString(v.kind)) + "] " + v.message;
    throw Error(ErrorCode::Validation, msg);
  }
}

std::vector<Scene> loadScenes(const std::vector<fs::path>& scenePaths, const ModelDb& models) {
  std::vector<Scene> scenes;
  for (const auto& path : scenePaths) {
    const nlohmann::json j = readJsonFile(path);
    Scene scene;
    try {
      scene = sceneFromJson(j);
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ": " + e.what());
    }
    validateScene(scene, models, path.string());
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

Corpus loadCorpus(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, dir.string() + ": not a directory");
  Corpus corpus;
  const fs::path modelsPath = dir / "models.json";
  if (!fs::exists(modelsPath)) throw Error(ErrorCode::Io, modelsPath.string() + ": missing model database");
  try {
    corpus.models = modelDbFromJson(readJsonFile(modelsPath));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(e.code(), modelsPath.string() + ": " + e.what());
  }
  const fs::path taxonomyPath = dir / "taxonomy.json";
  if (fs::exists(taxonomyPath)) {
    try {
      corpus.taxonomy = CategoryTaxonomy::fromJson(readJsonFile(taxonomyPath));
    } catch (const Error& e) {
      throw Error(e.code(), taxonomyPath.string() + ": " + e.what());
    }
  }
  std::vector<fs::path> paths;
  const fs::path scenesDir = dir / "scenes";
  if (fs::is_directory(scenesDir)) {
    for (const auto& entry : fs::directory_iterator(scenesDir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") paths.push_back(entry.path());
    }
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw Error(ErrorCode::Validation, scenesDir.string() + ": no scene files");
  corpus.scenes = loadScenes(paths, corpus.models);
  return corpus;
}

void writeCorpus(const fs::path& dir, const Corpus& corpus) {
  fs::create_directories(dir / "scenes");
  writeJsonFile(dir / "models.json", toJson(corpus.models));
  writeJsonFile(dir / "taxonomy.json", corpus.taxonomy.toJson());
  for (const auto& scene : corpus.scenes) writeJsonFile(dir / "scenes" / (scene.id + ".json"), toJson(scene));
}

// ---------------------------------------------------------------------------
// Support surfaces

SupportContact identifySupportSurface(const ModelInstance& child, const ModelInstance& parent,
                                      const ModelDb& models) {
  const OrientedBox childBox = instanceBox(child, models.at(child.modelId));
  const OrientedBox parentBox = instanceBox(parent, models.at(parent.modelId));

  SupportContact best;
  double bestDistance = std::numeric_limits<double>::infinity();
  for (AttachmentFace childFace : kFaceTieBreakOrder) {
    const Vec3 midpoint = childBox.faceCenter(childFace);
    const Vec3 childNormal = childBox.faceNormal(childFace);
    for (AttachmentFace parentFace : kAllFaces) {
      // Rooms offer their inside faces, furniture its outside.
      const Vec3 surfaceNormal =
          parent.isArchitecture ? Vec3(-parentBox.faceNormal(parentFace)) : parentBox.faceNormal(parentFace);
      if (childNormal.dot(surfaceNormal) > -0.5) continue;
      const double d = parentBox.distanceToFace(midpoint, parentFace);
      if (d <= kContactThreshold && d < bestDistance) {
        bestDistance = d;
        best.childFace = childFace;
        best.surfaceNormal = surfaceNormal;
        best.contactPoint = midpoint;
        best.distance = d;
      }
    }
  }
  if (bestDistance == std::numeric_limits<double>::infinity()) {
    SupportContact fallback;
    fallback.childFace = AttachmentFace::Bottom;
    fallback.surfaceNormal = Vec3::UnitZ();
    fallback.contactPoint = childBox.faceCenter(AttachmentFace::Bottom);
    fallback.parentSurface = featurizeSurface(Vec3::UnitZ(), parent.isArchitecture);
    fallback.distance = std::numeric_limits<double>::infinity();
    fallback.lowConfidence = true;
    return fallback;
  }
  best.parentSurface = featurizeSurface(best.surfaceNormal, parent.isArchitecture);
  return best;
}

// ---------------------------------------------------------------------------
// Observation extraction

namespace {

struct SceneIndex {
  const Scene& scene;
  const ModelDb& models;

  const std::string& categoryOf(const ModelInstance& o) const { return models.at(o.modelId).category; }
};

}  // namespace

ObservationSet extractObservations(const std::vector<Scene>& scenes, const ModelDb& models,
                                   const CategoryTaxonomy& taxonomy) {
  ObservationSet obs;
  obs.stats.sceneCount = scenes.size();

  std::set<std::string> seenAsFurniture;
  std::set<std::string> seenAsArchitecture;
  // (parentCategory) -> child categories observed on it anywhere in the corpus
  std::map<std::string, std::set<std::string>> observedOnParent;

  for (const auto& scene : scenes) {
    ++obs.stats.scenesPerType[scene.sceneType];
    for (const auto& o : scene.objects) {
      (o.isArchitecture ? seenAsArchitecture : seenAsFurniture).insert(models.at(o.modelId).category);
    }
    for (const auto& [childId, parentId] : scene.supportEdges) {
      const ModelInstance* child = scene.find(childId);
      const ModelInstance* parent = scene.find(parentId);
      if (child == nullptr || parent == nullptr) continue;
      observedOnParent[models.at(parent->modelId).category].insert(models.at(child->modelId).category);
    }
  }
  for (const auto& c : seenAsArchitecture) {
    if (seenAsFurniture.count(c) == 0) obs.stats.architectureCategories.insert(c);
  }

  std::map<std::string, bool> hasFrontCache;
  auto refHasFront = [&](const std::string& category) {
    auto it = hasFrontCache.find(category);
    if (it == hasFrontCache.end()) {
      it = hasFrontCache.emplace(category, categoryHasFront(category, taxonomy, models)).first;
    }
    return it->second;
  };

  for (const auto& scene : scenes) {
    const SceneIndex index{scene, models};

    // Counts: one observation per (parent instance, child category observed on that parent category).
    for (const auto& parent : scene.objects) {
      const std::string& parentCategory = index.categoryOf(parent);
      auto observed = observedOnParent.find(parentCategory);
      if (observed == observedOnParent.end()) continue;
      std::map<std::string, int> counts;
      for (const auto& c : observed->second) counts[c] = 0;
      for (const ModelInstance* child : scene.childrenOf(parent.id)) ++counts[index.categoryOf(*child)];
      for (const auto& [category, n] : counts) {
        obs.counts.push_back({scene.id, parent.id, category, parentCategory, scene.sceneType, n});
      }
    }

    for (const auto& [childId, parentId] : scene.supportEdges) {
      const ModelInstance* child = scene.find(childId);
      const ModelInstance* parent = scene.find(parentId);
      if (child == nullptr || parent == nullptr || child == parent) continue;
      const std::string& childCategory = index.categoryOf(*child);
      const std::string& parentCategory = index.categoryOf(*parent);

      const SupportContact contact = identifySupportSurface(*child, *parent, models);
      obs.supports.push_back({scene.id, child->id, childCategory, parentCategory, scene.sceneType,
                              contact.parentSurface, contact.childFace, contact.lowConfidence});

      const PoseAxes objAxes = instanceAxes(*child, models.at(child->modelId));
      const NormalClass cls = contact.parentSurface.normalClass;
      auto addRelative = [&](const ModelInstance& ref, Relationship relationship) {
        const std::string& refCategory = index.categoryOf(ref);
        const RelativePose pose =
            relativePose(objAxes, instanceAxes(ref, models.at(ref.modelId)), contact.surfaceNormal, cls);
        RelObservation r;
        r.sceneId = scene.id;
        r.objId = child->id;
        r.refId = ref.id;
        r.objCategory = childCategory;
        r.refCategory = refCategory;
        r.sceneType = scene.sceneType;
        r.relationship = relationship;
        r.surface = contact.parentSurface;
        r.theta = pose.theta;
        if (!refHasFront(refCategory) && cls != NormalClass::Horizontal) {
          r.radial = pose.radius;
        } else {
          r.delta = pose.delta;
        }
        obs.relatives.push_back(std::move(r));
      };

      addRelative(*parent, Relationship::ChildParent);
      for (const ModelInstance* sibling : scene.childrenOf(parent->id)) {
        if (sibling->id != child->id) addRelative(*sibling, Relationship::Sibling);
      }
    }
  }

  std::sort(obs.supports.begin(), obs.supports.end(), [](const auto& a, const auto& b) {
    return std::tie(a.sceneId, a.childId) < std::tie(b.sceneId, b.childId);
  });
  std::sort(obs.counts.begin(), obs.counts.end(), [](const auto& a, const auto& b) {
    return std::tie(a.sceneId, a.parentId, a.childCategory) < std::tie(b.sceneId, b.parentId, b.childCategory);
  });
  std::sort(obs.relatives.begin(), obs.relatives.end(), [](const auto& a, const auto& b) {
    return std::tie(a.sceneId, a.objId, a.relationship, a.refId) <
           std::tie(b.sceneId, b.objId, b.relationship, b.refId);
  });
  return obs;
}

}  // namespace scenehint
