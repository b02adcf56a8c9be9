#include "scenehint/suggest.hpp"

#include "scenehint/error.hpp"
#include "scenehint/scene_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>

namespace scenehint {

namespace {

constexpr double kDegree = kPi / 180.0;

}  // namespace

// ---------------------------------------------------------------------------
// Queries

ContextQuery makeContextQuery(const Scene& scene, const ModelDb& models, const std::string& parentId,
                              const Vec3& pos, std::optional<Vec3> surfaceNormal) {
  const ModelInstance* parent = scene.find(parentId);
  if (parent == nullptr) throw Error(ErrorCode::NotFound, "parent object '" + parentId + "' not in scene");
  const ModelMetadata& meta = models.at(parent->modelId);

  if (!surfaceNormal) {
    const OrientedBox box = instanceBox(*parent, meta);
    double best = std::numeric_limits<double>::infinity();
    for (AttachmentFace f : kAllFaces) {
      const double d = box.distanceToFace(pos, f);
      if (d < best) {
        best = d;
        surfaceNormal = parent->isArchitecture ? Vec3(-box.faceNormal(f)) : box.faceNormal(f);
      }
    }
  }
  if (!isUnit(*surfaceNormal)) throw Error(ErrorCode::InvalidInput, "surface normal must be a unit vector");

  ContextQuery q;
  q.scene = &scene;
  q.parentId = parentId;
  q.parentCategory = meta.category;
  q.surfaceNormal = *surfaceNormal;
  q.surfaceType = featurizeSurface(*surfaceNormal, parent->isArchitecture);
  q.pos = pos;
  q.sceneType = scene.sceneType;
  return q;
}

std::optional<ContextQuery> contextFromRay(const Scene& scene, const ModelDb& models, const Ray& ray) {
  const auto hit = raycastScene(ray, scene, models);
  if (!hit) return std::nullopt;
  return makeContextQuery(scene, models, hit->objectId, hit->point, hit->normal);
}

// ---------------------------------------------------------------------------
// Rotation

double evaluateRotationTerms(const std::vector<RotationTerm>& terms, double alpha) {
  double sum = 0.0;
  for (const RotationTerm& t : terms) {
    sum += t.density * t.mass[static_cast<std::size_t>(WrappedHistogram::binOf(t.theta0 + alpha))];
  }
  return sum;
}

double maximizeRotation(const std::vector<RotationTerm>& terms) {
  if (terms.empty()) return 0.0;

  const double binWidth = kTwoPi / kOrientationBins;
  std::vector<double> breaks = {0.0};
  for (const RotationTerm& t : terms) {
    for (int k = 0; k < kOrientationBins; ++k) breaks.push_back(wrapAngle(k * binWidth - t.theta0));
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  breaks.push_back(kTwoPi);

  // Merge neighbouring pieces of equal value into plateaus.
  struct Plateau {
    double lo;
    double hi;
    double value;
  };
  std::vector<Plateau> plateaus;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i];
    const double hi = breaks[i + 1];
    if (hi <= lo) continue;
    const double value = evaluateRotationTerms(terms, 0.5 * (lo + hi));
    if (!plateaus.empty() && plateaus.back().value == value) {
      plateaus.back().hi = hi;
    } else {
      plateaus.push_back({lo, hi, value});
    }
  }

  const Plateau* best = &plateaus.front();
  for (const Plateau& p : plateaus) {
    if (p.value > best->value) best = &p;
  }

  for (int deg = 0; deg < 360; ++deg) {
    if (evaluateRotationTerms(terms, deg * kDegree) == best->value) return deg * kDegree;
  }
  return 0.5 * (best->lo + best->hi);
}

namespace {

const ModelMetadata* representativeFor(const ModelDb& models, const std::string& category) {
  return models.representative(category);
}

AttachmentFace faceFor(const PriorsDB& db, const ModelMetadata& rep, const ContextQuery& query) {
  return db.chooseAttachmentFace(rep.category, query.surfaceType, rep.shapeClass());
}

}  // namespace

std::vector<RotationTerm> rotationTerms(const PriorsDB& db, const ModelDb& models, const std::string& category,
                                        const ContextQuery& query, AttachmentFace face) {
  if (query.scene == nullptr) throw Error(ErrorCode::InvalidInput, "query has no scene");
  const ModelMetadata* rep = representativeFor(models, category);
  if (rep == nullptr) return {};

  ModelInstance candidate;
  candidate.modelId = rep->modelId;
  candidate.transform = composePlacement(query.pos, query.surfaceNormal, face, 0.0, *rep);
  const PoseAxes candAxes = instanceAxes(candidate, *rep);

  const Scene& scene = *query.scene;
  std::vector<std::pair<const ModelInstance*, Relationship>> neighbors;
  if (const ModelInstance* parent = scene.find(query.parentId)) {
    neighbors.emplace_back(parent, Relationship::ChildParent);
  }
  for (const ModelInstance* child : scene.childrenOf(query.parentId)) {
    neighbors.emplace_back(child, Relationship::Sibling);
  }

  const double eps = db.settings.smoothingEpsilon;
  std::vector<RotationTerm> terms;
  for (const auto& [neighbor, relationship] : neighbors) {
    const ModelMetadata* refMeta = models.find(neighbor->modelId);
    if (refMeta == nullptr) continue;
    const RelativePose pose =
        relativePose(candAxes, instanceAxes(*neighbor, *refMeta), query.surfaceNormal, query.surfaceType.normalClass);
    const RelKey key{category, refMeta->category, query.sceneType, relationship, query.surfaceType};

    RotationTerm term;
    const RelPosKde* kde = db.resolvePosition(key);
    term.density = kde == nullptr ? eps : kde->density(pose);
    term.theta0 = pose.theta;
    const WrappedHistogram* hist = db.resolveOrientation(key);
    for (int b = 0; b < kOrientationBins; ++b) {
      term.mass[static_cast<std::size_t>(b)] = hist == nullptr ? eps : hist->mass(b, eps);
    }
    terms.push_back(term);
  }
  return terms;
}

double positionScore(const PriorsDB& db, const ModelDb& models, const std::string& category,
                     const ContextQuery& query, double alpha) {
  const ModelMetadata* rep = representativeFor(models, category);
  if (rep == nullptr) return 0.0;
  return evaluateRotationTerms(rotationTerms(db, models, category, query, faceFor(db, *rep, query)), alpha);
}

double optimizeRotation(const PriorsDB& db, const ModelDb& models, const std::string& category,
                        const ContextQuery& query, AttachmentFace face) {
  return maximizeRotation(rotationTerms(db, models, category, query, face));
}

// ---------------------------------------------------------------------------
// Ranking

std::vector<Suggestion> suggest(const PriorsDB& db, const ModelDb& models, const ContextQuery& query,
                                const SuggestOptions& options) {
  if (query.scene == nullptr) throw Error(ErrorCode::InvalidInput, "query has no scene");
  const Scene& scene = *query.scene;
  const auto children = scene.childrenOf(query.parentId);

  std::vector<Suggestion> out;
  for (const std::string& category : models.categories()) {
    if (db.architectureCategories.count(category) != 0) continue;
    const ModelMetadata* rep = representativeFor(models, category);

    int existing = 0;
    for (const ModelInstance* child : children) {
      const ModelMetadata* meta = models.find(child->modelId);
      if (meta != nullptr && db.taxonomy.isSelfOrDescendant(meta->category, category)) ++existing;
    }

    Suggestion s;
    s.category = category;
    s.representativeModelId = rep->modelId;
    for (const ModelMetadata* m : models.modelsInCategory(category)) s.memberModelIds.push_back(m->modelId);
    s.placement.face = faceFor(db, *rep, query);

    const auto terms = rotationTerms(db, models, category, query, s.placement.face);
    s.alpha = maximizeRotation(terms);
    s.breakdown.occurrence = db.occurrenceProbability(category, query.parentCategory, query.sceneType, existing);
    s.breakdown.surface = db.supportSurfaceProbability(query.surfaceType, category);
    s.breakdown.position = evaluateRotationTerms(terms, s.alpha);
    s.score = options.occurrenceWeight * s.breakdown.occurrence * s.breakdown.surface +
              options.positionWeight * s.breakdown.position;

    s.anchor = query.pos;
    s.surfaceNormal = query.surfaceNormal;
    s.placement.transform = composePlacement(query.pos, query.surfaceNormal, s.placement.face, s.alpha, *rep);
    out.push_back(std::move(s));
  }

  std::sort(out.begin(), out.end(), [](const Suggestion& a, const Suggestion& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.category < b.category;
  });
  if (options.limit > 0 && out.size() > options.limit) out.resize(options.limit);
  return out;
}

// ---------------------------------------------------------------------------
// Search and drill-down

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) != 0) {
      current.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<SearchHit> keywordSearch(const ModelDb& models, std::string_view text, std::size_t limit) {
  const auto queryTokens = tokenize(text);
  const std::set<std::string> wanted(queryTokens.begin(), queryTokens.end());
  std::vector<SearchHit> hits;
  if (wanted.empty()) return hits;

  for (const auto& [id, meta] : models.models()) {
    std::set<std::string> have;
    auto addAll = [&](std::string_view s) {
      for (auto& t : tokenize(s)) have.insert(std::move(t));
    };
    addAll(meta.name);
    addAll(meta.category);
    addAll(meta.description);
    for (const auto& tag : meta.tags) addAll(tag);

    int score = 0;
    for (const auto& t : wanted) score += static_cast<int>(have.count(t));
    if (score > 0) hits.push_back({id, score});
  }
  std::stable_sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) { return a.score > b.score; });
  if (limit > 0 && hits.size() > limit) hits.resize(limit);
  return hits;
}

std::vector<ExpandedModel> expandCategory(const ModelDb& models, const std::string& category,
                                          const Suggestion& placedAs) {
  std::vector<ExpandedModel> out;
  for (const ModelMetadata* m : models.modelsInCategory(category)) {
    ExpandedModel e;
    e.modelId = m->modelId;
    e.placement.face = placedAs.placement.face;
    e.placement.transform =
        composePlacement(placedAs.anchor, placedAs.surfaceNormal, placedAs.placement.face, placedAs.alpha, *m);
    e.score = placedAs.score;
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json toJson(const Suggestion& s) {
  return {{"category", s.category},
          {"representativeModelId", s.representativeModelId},
          {"memberModelIds", s.memberModelIds},
          {"placement", {{"transform", toJson(s.placement.transform)}, {"face", std::string(toString(s.placement.face))}}},
          {"score", s.score},
          {"alpha", s.alpha},
          {"anchor", toJson(s.anchor)},
          {"surfaceNormal", toJson(s.surfaceNormal)},
          {"breakdown",
           {{"occurrence", s.breakdown.occurrence}, {"surface", s.breakdown.surface}, {"position", s.breakdown.position}}}};
}

nlohmann::json toJson(const ContextQuery& q) {
  return {{"parentId", q.parentId},
          {"parentCategory", q.parentCategory},
          {"surfaceNormal", toJson(q.surfaceNormal)},
          {"surfaceType", q.surfaceType.toString()},
          {"pos", toJson(q.pos)},
          {"sceneType", q.sceneType}};
}

}  // namespace scenehint
