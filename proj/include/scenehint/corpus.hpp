#pragma once

#include "scenehint/model.hpp"
#include "scenehint/scene.hpp"
#include "scenehint/taxonomy.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scenehint {

/// Contact tolerance between a child bbox face midpoint and a parent surface (meters).
inline constexpr double kContactThreshold = 0.05;

enum class Relationship { Sibling, ChildParent };

std::string_view toString(Relationship r);
Relationship parseRelationship(std::string_view name);

struct SupportObservation {
  std::string sceneId;
  std::string childId;
  std::string childCategory;
  std::string parentCategory;
  std::string sceneType;
  SurfaceType parentSurface;
  AttachmentFace childFace = AttachmentFace::Bottom;
  bool lowConfidence = false;
};

struct CountObservation {
  std::string sceneId;
  std::string parentId;
  std::string childCategory;
  std::string parentCategory;
  std::string sceneType;
  int count = 0;
};

struct RelObservation {
  std::string sceneId;
  std::string objId;
  std::string refId;
  std::string objCategory;
  std::string refCategory;
  std::string sceneType;
  Relationship relationship = Relationship::Sibling;
  SurfaceType surface;
  std::optional<Vec2> delta;     // reference has a semantic front (or the plane is vertical)
  std::optional<double> radial;  // otherwise
  double theta = 0.0;
};

struct CorpusStats {
  std::size_t sceneCount = 0;
  std::map<std::string, std::size_t> scenesPerType;
  /// Categories that only ever occur as architecture (rooms).
  std::set<std::string> architectureCategories;
};

struct ObservationSet {
  std::vector<SupportObservation> supports;
  std::vector<CountObservation> counts;
  std::vector<RelObservation> relatives;
  CorpusStats stats;

  bool empty() const { return supports.empty() && counts.empty() && relatives.empty(); }
};

struct Corpus {
  std::vector<Scene> scenes;
  ModelDb models;
  CategoryTaxonomy taxonomy;
};

/// Checks the support tree and that every modelId is known; throws
/// Error(Validation) naming `source` and the offending object.
void validateScene(const Scene& scene, const ModelDb& models, const std::string& source);

/// Loads scene files against an already-loaded model database.
std::vector<Scene> loadScenes(const std::vector<std::filesystem::path>& scenePaths, const ModelDb& models);

/// Loads <dir>/models.json, <dir>/taxonomy.json (optional) and every
/// <dir>/scenes/*.json in filename order.
Corpus loadCorpus(const std::filesystem::path& dir);

/// Writes a corpus in the directory layout loadCorpus reads.
void writeCorpus(const std::filesystem::path& dir, const Corpus& corpus);

struct SupportContact {
  SurfaceType parentSurface;
  AttachmentFace childFace = AttachmentFace::Bottom;
  Vec3 surfaceNormal = Vec3::UnitZ();  // world normal of the parent surface at contact
  Vec3 contactPoint = Vec3::Zero();    // midpoint of the child's attachment face
  double distance = 0.0;
  bool lowConfidence = false;
};

/// Finds which child bbox face rests on which parent surface. The pair with
/// the smallest face-midpoint-to-surface distance within kContactThreshold
/// (and opposing normals) wins; with none, the child is assumed to sit on its
/// bottom on an upward surface and the result is flagged low-confidence.
SupportContact identifySupportSurface(const ModelInstance& child, const ModelInstance& parent,
                                      const ModelDb& models);

/// Support, count and relative-placement observations over validated scenes,
/// sorted by scene id then object id.
ObservationSet extractObservations(const std::vector<Scene>& scenes, const ModelDb& models,
                                   const CategoryTaxonomy& taxonomy);

}  // namespace scenehint
