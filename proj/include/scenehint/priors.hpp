#pragma once

#include "scenehint/corpus.hpp"
#include "scenehint/geometry.hpp"
#include "scenehint/model.hpp"
#include "scenehint/taxonomy.hpp"

#include "json.hpp"

#include <array>
#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace scenehint {

/// Scene-type wildcard used by the pooled (any scene type) backoff entries.
inline constexpr const char* kAnySceneType = "*";
inline constexpr int kPriorsFormatVersion = 1;
inline constexpr int kOrientationBins = 36;

// ---------------------------------------------------------------------------
// Keys

struct CountKey {
  std::string child;
  std::string parent;
  std::string sceneType;
  auto operator<=>(const CountKey&) const = default;
};

struct FaceKey {
  std::string category;
  SurfaceType surface;
  auto operator<=>(const FaceKey&) const = default;
};

struct RelKey {
  std::string objCategory;
  std::string refCategory;
  std::string sceneType;
  Relationship relationship = Relationship::Sibling;
  SurfaceType surface;
  auto operator<=>(const RelKey&) const = default;
};

// ---------------------------------------------------------------------------
// Distributions. Categoricals keep integer counts so every probability is an
// exact ratio of two observation counts.

struct CountHistogram {
  std::map<int, long> counts;  // instances per parent -> number of parent instances
  long nObs = 0;

  double probability(int k) const;
  /// P(count > k)
  double tail(int k) const;
  std::map<int, double> probs() const;
};

struct SurfaceCategorical {
  std::array<long, SurfaceType::kCount> counts{};
  long nObs = 0;
  double probability(SurfaceType t) const;
};

struct FaceCategorical {
  std::array<long, 6> counts{};  // indexed by faceIndex()
  long nObs = 0;
  double probability(AttachmentFace f) const;
};

/// Gaussian kernel density over relative positions; radial entries hold the
/// distance in samples[i].x() and use bandwidth.x().
struct RelPosKde {
  bool radial = false;
  std::vector<Vec2> samples;
  Vec2 bandwidth = Vec2::Constant(0.05);
  long nObs = 0;

  double density(const RelativePose& pose) const;
  double density2d(const Vec2& delta) const;
  double density1d(double radius) const;
};

/// Scott's rule (n^(-1/(d+4)) * sigma per axis) floored at this value.
inline constexpr double kMinBandwidth = 0.05;

struct WrappedHistogram {
  std::array<long, kOrientationBins> counts{};
  long nObs = 0;

  static int binOf(double theta);
  /// Laplace-smoothed bin mass: (n_b + eps) / (N + 36 eps).
  double mass(int bin, double epsilon) const;
  double probability(double theta, double epsilon) const { return mass(binOf(theta), epsilon); }
};

// ---------------------------------------------------------------------------

/// Which backoff levels a query looked at, in order; -1 marks the final fallback.
struct LookupTrace {
  std::vector<int> levels;
  int resolvedLevel = -1;
};

struct PriorsSettings {
  int backoffThreshold = 5;
  double smoothingEpsilon = 1e-4;
  bool operator==(const PriorsSettings&) const = default;
};

/// Geometry-only guess when no observations exist: an upward surface and a
/// face from the model's shape class.
struct GeometryFallback {
  SurfaceType supportSurface;
  AttachmentFace face;
};

GeometryFallback geometryFallback(const ModelMetadata& meta);
/// blocky -> bottom; flat -> back on vertical (wall) surfaces, else bottom; thin -> left.
AttachmentFace geometryFallbackFace(ShapeClass shape, SurfaceType surface);
/// Upward surfaces share the mass equally, everything else gets zero.
double geometryFallbackSurfaceProbability(SurfaceType t);

/// All learned contextual priors. Immutable once learned or loaded; every
/// query is a pure function and safe to call concurrently.
///
/// Entries for a category pool the observations of the category and all of
/// its taxonomy descendants. Queries walk the backoff ladder
///   (C, p, s) -> (parent(C), p, s) -> (C, p, *) -> (parent(C), p, *)
/// (scene-free families use only the category steps) and take the first
/// entry with at least backoffThreshold observations, else the first entry
/// with any observation, else the fallback.
class PriorsDB {
 public:
  PriorsSettings settings;
  CategoryTaxonomy taxonomy;
  std::map<CountKey, CountHistogram> countHists;
  std::map<std::string, SurfaceCategorical> supportCats;
  std::map<FaceKey, FaceCategorical> faceCats;
  std::map<RelKey, RelPosKde> relPos;
  std::map<RelKey, WrappedHistogram> relOrient;
  std::map<std::string, ShapeClass> categoryShapes;
  std::set<std::string> architectureCategories;

  /// P(|C on p_C in s_C| > k)
  double occurrenceProbability(const std::string& category, const std::string& parentCategory,
                               const std::string& sceneType, int existingCount,
                               LookupTrace* trace = nullptr) const;

  double supportSurfaceProbability(SurfaceType t, const std::string& category, LookupTrace* trace = nullptr) const;

  /// `fallbackShape` overrides the stored category shape when no observations exist.
  double attachmentFaceProbability(AttachmentFace f, const std::string& category, SurfaceType t,
                                   std::optional<ShapeClass> fallbackShape = std::nullopt,
                                   LookupTrace* trace = nullptr) const;

  /// argmax_f P(f | C, t), ties broken by kFaceTieBreakOrder.
  AttachmentFace chooseAttachmentFace(const std::string& category, SurfaceType t,
                                      std::optional<ShapeClass> fallbackShape = std::nullopt) const;

  double relposDensity(const RelativePose& pose, const RelKey& key, LookupTrace* trace = nullptr) const;
  double relorientProbability(double theta, const RelKey& key, LookupTrace* trace = nullptr) const;

  /// The orientation entry the ladder resolves to, or nullptr (uniform epsilon).
  const WrappedHistogram* resolveOrientation(const RelKey& key, LookupTrace* trace = nullptr) const;
  const RelPosKde* resolvePosition(const RelKey& key, LookupTrace* trace = nullptr) const;

  nlohmann::json toJson() const;
  /// Throws Error(FormatVersion) or Error(CorruptFile).
  static PriorsDB fromJson(const nlohmann::json& j);

  bool operator==(const PriorsDB& other) const;
};

/// Estimates every prior family from the observations. Throws
/// Error(InvalidInput) when `observations` is empty.
PriorsDB learnPriors(const ObservationSet& observations, const CategoryTaxonomy& taxonomy, const ModelDb& models,
                     const PriorsSettings& settings = {});

void savePriors(const PriorsDB& db, const std::filesystem::path& path);
/// Throws Error(Io), Error(CorruptFile) or Error(FormatVersion).
PriorsDB loadPriors(const std::filesystem::path& path);

}  // namespace scenehint
