#include "scenehint/priors.hpp"

#include "scenehint/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>

namespace scenehint {

// ---------------------------------------------------------------------------
// Distributions

double CountHistogram::probability(int k) const {
  if (nObs <= 0) return 0.0;
  auto it = counts.find(k);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(nObs);
}

double CountHistogram::tail(int k) const {
  if (nObs <= 0) return 0.0;
  long above = 0;
  for (auto it = counts.upper_bound(k); it != counts.end(); ++it) above += it->second;
  return static_cast<double>(above) / static_cast<double>(nObs);
}

std::map<int, double> CountHistogram::probs() const {
  std::map<int, double> out;
  for (const auto& [k, n] : counts) out[k] = static_cast<double>(n) / static_cast<double>(nObs);
  return out;
}

double SurfaceCategorical::probability(SurfaceType t) const {
  if (nObs <= 0) return 0.0;
  return static_cast<double>(counts[static_cast<std::size_t>(t.index())]) / static_cast<double>(nObs);
}

double FaceCategorical::probability(AttachmentFace f) const {
  if (nObs <= 0) return 0.0;
  return static_cast<double>(counts[static_cast<std::size_t>(faceIndex(f))]) / static_cast<double>(nObs);
}

double RelPosKde::density2d(const Vec2& delta) const {
  if (samples.empty()) return 0.0;
  const double hx = bandwidth.x();
  const double hy = bandwidth.y();
  double sum = 0.0;
  for (const Vec2& s : samples) {
    const double dx = (delta.x() - s.x()) / hx;
    const double dy = (delta.y() - s.y()) / hy;
    sum += std::exp(-0.5 * (dx * dx + dy * dy));
  }
  return sum / (static_cast<double>(samples.size()) * kTwoPi * hx * hy);
}

double RelPosKde::density1d(double radius) const {
  if (samples.empty()) return 0.0;
  const double h = bandwidth.x();
  double sum = 0.0;
  for (const Vec2& s : samples) {
    const double d = (radius - s.x()) / h;
    sum += std::exp(-0.5 * d * d);
  }
  return sum / (static_cast<double>(samples.size()) * std::sqrt(kTwoPi) * h);
}

double RelPosKde::density(const RelativePose& pose) const {
  return radial ? density1d(pose.radius) : density2d(pose.delta);
}

int WrappedHistogram::binOf(double theta) {
  const double binWidth = kTwoPi / kOrientationBins;
  const int bin = static_cast<int>(std::floor(wrapAngle(theta) / binWidth));
  return std::clamp(bin, 0, kOrientationBins - 1);
}

double WrappedHistogram::mass(int bin, double epsilon) const {
  const double n = static_cast<double>(counts[static_cast<std::size_t>(bin)]);
  return (n + epsilon) / (static_cast<double>(nObs) + kOrientationBins * epsilon);
}

// ---------------------------------------------------------------------------
// Geometry fallback

AttachmentFace geometryFallbackFace(ShapeClass shape, SurfaceType surface) {
  switch (shape) {
    case ShapeClass::Blocky: return AttachmentFace::Bottom;
    case ShapeClass::Flat:
      return surface.normalClass == NormalClass::Horizontal ? AttachmentFace::Back : AttachmentFace::Bottom;
    case ShapeClass::Thin: return AttachmentFace::Left;
  }
  return AttachmentFace::Bottom;
}

GeometryFallback geometryFallback(const ModelMetadata& meta) {
  const SurfaceType upExterior{NormalClass::Up, Interiority::Exterior};
  return {upExterior, geometryFallbackFace(meta.shapeClass(), upExterior)};
}

double geometryFallbackSurfaceProbability(SurfaceType t) { return t.normalClass == NormalClass::Up ? 0.5 : 0.0; }

// ---------------------------------------------------------------------------
// Backoff ladder

namespace {

template <typename Map>
const typename Map::mapped_type* resolveLadder(const Map& map, const std::vector<std::pair<int, typename Map::key_type>>& ladder,
                                               int threshold, LookupTrace* trace) {
  const typename Map::mapped_type* firstNonEmpty = nullptr;
  int firstNonEmptyLevel = -1;
  for (const auto& [level, key] : ladder) {
    if (trace != nullptr) trace->levels.push_back(level);
    auto it = map.find(key);
    if (it == map.end() || it->second.nObs <= 0) continue;
    if (it->second.nObs >= threshold) {
      if (trace != nullptr) trace->resolvedLevel = level;
      return &it->second;
    }
    if (firstNonEmpty == nullptr) {
      firstNonEmpty = &it->second;
      firstNonEmptyLevel = level;
    }
  }
  if (trace != nullptr) {
    trace->resolvedLevel = firstNonEmptyLevel;
    if (firstNonEmpty == nullptr) trace->levels.push_back(-1);
  }
  return firstNonEmpty;
}

std::vector<std::pair<int, CountKey>> countLadder(const CategoryTaxonomy& taxonomy, const std::string& c,
                                                  const std::string& p, const std::string& s) {
  const auto parent = taxonomy.parentOf(c);
  std::vector<std::pair<int, CountKey>> ladder = {{0, {c, p, s}}};
  if (parent) ladder.push_back({1, {*parent, p, s}});
  ladder.push_back({2, {c, p, kAnySceneType}});
  if (parent) ladder.push_back({3, {*parent, p, kAnySceneType}});
  return ladder;
}

std::vector<std::pair<int, RelKey>> relLadder(const CategoryTaxonomy& taxonomy, const RelKey& key) {
  const auto parent = taxonomy.parentOf(key.objCategory);
  std::vector<std::pair<int, RelKey>> ladder = {{0, key}};
  if (parent) {
    RelKey k = key;
    k.objCategory = *parent;
    ladder.push_back({1, k});
  }
  RelKey pooled = key;
  pooled.sceneType = kAnySceneType;
  ladder.push_back({2, pooled});
  if (parent) {
    pooled.objCategory = *parent;
    ladder.push_back({3, pooled});
  }
  return ladder;
}

}  // namespace

double PriorsDB::occurrenceProbability(const std::string& category, const std::string& parentCategory,
                                       const std::string& sceneType, int existingCount, LookupTrace* trace) const {
  const CountHistogram* hist = resolveLadder(countHists, countLadder(taxonomy, category, parentCategory, sceneType),
                                             settings.backoffThreshold, trace);
  if (hist == nullptr) return settings.smoothingEpsilon;
  return hist->tail(std::max(0, existingCount));
}

double PriorsDB::supportSurfaceProbability(SurfaceType t, const std::string& category, LookupTrace* trace) const {
  std::vector<std::pair<int, std::string>> ladder = {{0, category}};
  if (auto parent = taxonomy.parentOf(category)) ladder.push_back({1, *parent});
  const SurfaceCategorical* cat = resolveLadder(supportCats, ladder, settings.backoffThreshold, trace);
  if (cat == nullptr) return geometryFallbackSurfaceProbability(t);
  return cat->probability(t);
}

double PriorsDB::attachmentFaceProbability(AttachmentFace f, const std::string& category, SurfaceType t,
                                           std::optional<ShapeClass> fallbackShape, LookupTrace* trace) const {
  std::vector<std::pair<int, FaceKey>> ladder = {{0, {category, t}}};
  if (auto parent = taxonomy.parentOf(category)) ladder.push_back({1, {*parent, t}});
  const FaceCategorical* cat = resolveLadder(faceCats, ladder, settings.backoffThreshold, trace);
  if (cat != nullptr) return cat->probability(f);
  ShapeClass shape = ShapeClass::Blocky;
  if (fallbackShape) {
    shape = *fallbackShape;
  } else if (auto it = categoryShapes.find(category); it != categoryShapes.end()) {
    shape = it->second;
  }
  return geometryFallbackFace(shape, t) == f ? 1.0 : 0.0;
}

AttachmentFace PriorsDB::chooseAttachmentFace(const std::string& category, SurfaceType t,
                                              std::optional<ShapeClass> fallbackShape) const {
  AttachmentFace best = kFaceTieBreakOrder.front();
  double bestP = -1.0;
  for (AttachmentFace f : kFaceTieBreakOrder) {
    const double p = attachmentFaceProbability(f, category, t, fallbackShape);
    if (p > bestP) {
      bestP = p;
      best = f;
    }
  }
  return best;
}

const RelPosKde* PriorsDB::resolvePosition(const RelKey& key, LookupTrace* trace) const {
  return resolveLadder(relPos, relLadder(taxonomy, key), settings.backoffThreshold, trace);
}

const WrappedHistogram* PriorsDB::resolveOrientation(const RelKey& key, LookupTrace* trace) const {
  return resolveLadder(relOrient, relLadder(taxonomy, key), settings.backoffThreshold, trace);
}

double PriorsDB::relposDensity(const RelativePose& pose, const RelKey& key, LookupTrace* trace) const {
  const RelPosKde* kde = resolvePosition(key, trace);
  return kde == nullptr ? settings.smoothingEpsilon : kde->density(pose);
}

double PriorsDB::relorientProbability(double theta, const RelKey& key, LookupTrace* trace) const {
  const WrappedHistogram* hist = resolveOrientation(key, trace);
  return hist == nullptr ? settings.smoothingEpsilon : hist->probability(theta, settings.smoothingEpsilon);
}

bool PriorsDB::operator==(const PriorsDB& other) const { return toJson() == other.toJson(); }

// ---------------------------------------------------------------------------
// Learning

namespace {

std::vector<std::string> selfAndAncestors(const CategoryTaxonomy& taxonomy, const std::string& category) {
  std::vector<std::string> out = {category};
  for (auto& a : taxonomy.ancestors(category)) out.push_back(std::move(a));
  return out;
}

double sampleStddev(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return std::sqrt(sq / static_cast<double>(n - 1));
}

void fitBandwidth(RelPosKde& kde) {
  const std::size_t n = kde.samples.size();
  if (n == 0) return;
  const double dims = kde.radial ? 1.0 : 2.0;
  const double factor = std::pow(static_cast<double>(n), -1.0 / (dims + 4.0));
  std::vector<double> xs;
  std::vector<double> ys;
  for (const Vec2& s : kde.samples) {
    xs.push_back(s.x());
    ys.push_back(s.y());
  }
  kde.bandwidth.x() = std::max(kMinBandwidth, sampleStddev(xs) * factor);
  kde.bandwidth.y() = kde.radial ? kde.bandwidth.x() : std::max(kMinBandwidth, sampleStddev(ys) * factor);
}

}  // namespace

PriorsDB learnPriors(const ObservationSet& observations, const CategoryTaxonomy& taxonomy, const ModelDb& models,
                     const PriorsSettings& settings) {
  if (observations.empty()) throw Error(ErrorCode::InvalidInput, "cannot learn priors from an empty observation set");

  PriorsDB db;
  db.settings = settings;
  db.taxonomy = taxonomy;
  db.architectureCategories = observations.stats.architectureCategories;
  for (const auto& category : models.categories()) {
    db.categoryShapes[category] = models.representative(category)->shapeClass();
  }

  // Counts: aggregate each parent instance's children up the taxonomy first.
  struct ParentInstance {
    std::string parentCategory;
    std::string sceneType;
    std::map<std::string, long> counts;
  };
  std::map<std::pair<std::string, std::string>, ParentInstance> instances;
  for (const auto& c : observations.counts) {
    ParentInstance& inst = instances[{c.sceneId, c.parentId}];
    inst.parentCategory = c.parentCategory;
    inst.sceneType = c.sceneType;
    for (const auto& target : selfAndAncestors(taxonomy, c.childCategory)) inst.counts[target] += c.count;
  }
  for (const auto& [id, inst] : instances) {
    for (const auto& [category, n] : inst.counts) {
      for (const std::string& scene : {inst.sceneType, std::string(kAnySceneType)}) {
        CountHistogram& h = db.countHists[{category, inst.parentCategory, scene}];
        ++h.counts[static_cast<int>(n)];
        ++h.nObs;
      }
    }
  }

  for (const auto& s : observations.supports) {
    for (const auto& target : selfAndAncestors(taxonomy, s.childCategory)) {
      SurfaceCategorical& cat = db.supportCats[target];
      ++cat.counts[static_cast<std::size_t>(s.parentSurface.index())];
      ++cat.nObs;
      FaceCategorical& face = db.faceCats[{target, s.parentSurface}];
      ++face.counts[static_cast<std::size_t>(faceIndex(s.childFace))];
      ++face.nObs;
    }
  }

  for (const auto& r : observations.relatives) {
    for (const auto& target : selfAndAncestors(taxonomy, r.objCategory)) {
      for (const std::string& scene : {r.sceneType, std::string(kAnySceneType)}) {
        const RelKey key{target, r.refCategory, scene, r.relationship, r.surface};
        RelPosKde& kde = db.relPos[key];
        if (kde.nObs == 0) kde.radial = r.radial.has_value();
        if (kde.radial != r.radial.has_value()) {
          throw Error(ErrorCode::InvalidInput, "observations mix radial and planar offsets for one key");
        }
        kde.samples.push_back(r.radial ? Vec2(*r.radial, 0.0) : *r.delta);
        ++kde.nObs;
        WrappedHistogram& hist = db.relOrient[key];
        ++hist.counts[static_cast<std::size_t>(WrappedHistogram::binOf(r.theta))];
        ++hist.nObs;
      }
    }
  }
  for (auto& [key, kde] : db.relPos) {
    std::sort(kde.samples.begin(), kde.samples.end(),
              [](const Vec2& a, const Vec2& b) { return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y()); });
    fitBandwidth(kde);
  }
  return db;
}

}  // namespace scenehint
