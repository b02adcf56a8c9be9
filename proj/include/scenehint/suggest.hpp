#pragma once

#include "scenehint/model.hpp"
#include "scenehint/priors.hpp"
#include "scenehint/scene.hpp"

#include "json.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace scenehint {

/// Where a suggestion is requested: a point on a surface of one parent object.
struct ContextQuery {
  const Scene* scene = nullptr;
  std::string parentId;
  std::string parentCategory;
  Vec3 surfaceNormal = Vec3::UnitZ();
  SurfaceType surfaceType;
  Vec3 pos = Vec3::Zero();
  std::string sceneType;
};

/// Builds a query for a known parent. With no normal, the parent surface
/// closest to `pos` is used (inward faces for architecture). Throws
/// Error(NotFound) for an unknown parent and Error(InvalidInput) for a
/// non-unit normal.
ContextQuery makeContextQuery(const Scene& scene, const ModelDb& models, const std::string& parentId,
                              const Vec3& pos, std::optional<Vec3> surfaceNormal = std::nullopt);

/// Raycasts the scene and builds the query at the hit; nullopt on a miss.
std::optional<ContextQuery> contextFromRay(const Scene& scene, const ModelDb& models, const Ray& ray);

struct Placement {
  Transform transform;
  AttachmentFace face = AttachmentFace::Bottom;
};

struct ScoreBreakdown {
  double occurrence = 0.0;
  double surface = 0.0;
  double position = 0.0;
};

struct Suggestion {
  std::string category;
  std::string representativeModelId;
  std::vector<std::string> memberModelIds;
  Placement placement;
  double score = 0.0;
  double alpha = 0.0;
  Vec3 anchor = Vec3::Zero();
  Vec3 surfaceNormal = Vec3::UnitZ();
  ScoreBreakdown breakdown;
};

struct SuggestOptions {
  double occurrenceWeight = 1.0;
  double positionWeight = 0.25;
  std::size_t limit = 0;  // 0 = all categories
};

/// One neighbor's contribution to the position score as a function of the
/// candidate's spin: density * mass[bin(theta0 + alpha)].
struct RotationTerm {
  double density = 0.0;
  double theta0 = 0.0;
  std::array<double, kOrientationBins> mass{};
};

double evaluateRotationTerms(const std::vector<RotationTerm>& terms, double alpha);

/// Exact maximizer of the piecewise-constant sum over alpha in [0, 2pi).
/// Returns the smallest whole degree attaining the maximum when one exists,
/// otherwise the midpoint of the earliest maximal plateau.
double maximizeRotation(const std::vector<RotationTerm>& terms);

/// Per-neighbor terms (the parent plus every existing child of it) for a
/// candidate category placed at the query with the given face.
std::vector<RotationTerm> rotationTerms(const PriorsDB& db, const ModelDb& models, const std::string& category,
                                        const ContextQuery& query, AttachmentFace face);

/// Sum over the parent and its existing children of relpos density times
/// relorient probability, with the candidate spun by `alpha`.
double positionScore(const PriorsDB& db, const ModelDb& models, const std::string& category,
                     const ContextQuery& query, double alpha);

double optimizeRotation(const PriorsDB& db, const ModelDb& models, const std::string& category,
                        const ContextQuery& query, AttachmentFace face);

/// Ranked, placed suggestions for every non-architecture category in `models`.
/// Ties in score are broken by category name.
std::vector<Suggestion> suggest(const PriorsDB& db, const ModelDb& models, const ContextQuery& query,
                                const SuggestOptions& options = {});

struct SearchHit {
  std::string modelId;
  int score = 0;
};

/// Lowercased alphanumeric tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Models ranked by how many distinct query tokens appear in their name,
/// tags, category or description; ties by modelId; non-matching models omitted.
std::vector<SearchHit> keywordSearch(const ModelDb& models, std::string_view text, std::size_t limit = 0);

struct ExpandedModel {
  std::string modelId;
  Placement placement;
  double score = 0.0;
};

/// Every model of the suggestion's category, placed with the same anchor,
/// face and spin and carrying the same score.
std::vector<ExpandedModel> expandCategory(const ModelDb& models, const std::string& category,
                                          const Suggestion& placedAs);

nlohmann::json toJson(const Suggestion& s);
nlohmann::json toJson(const ContextQuery& q);

}  // namespace scenehint
