#pragma once

#include "scenehint/corpus.hpp"

#include "json.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace scenehint {

/// How categorical variables (scene type, counts, surfaces, faces) are drawn.
/// Quasi draws each variable from its own randomized Weyl sequence, so
/// empirical frequencies track the generating distribution at O(1/n);
/// iid uses plain pseudo-random draws. Positions and angles are always iid.
enum class CategoricalSampling { Quasi, Iid };

struct PositionSpec {
  enum class Kind { Gaussian, Radial, Uniform };
  Kind kind = Kind::Uniform;
  Vec2 mean = Vec2::Zero();    // Gaussian: delta in the reference frame
  Vec2 stddev = Vec2::Zero();
  double radiusMean = 0.0;     // Radial: distance from the reference center
  double radiusStd = 0.0;
};

struct OrientationSpec {
  bool uniform = true;
  double mean = 0.0;  // radians, relative to the reference heading
  double stddev = 0.0;
};

/// Places `childCategory` objects on every `parentCategory` instance of a
/// scene of type `sceneType`. Positions and orientations are relative to the
/// parent, or to the first sibling of category `relativeTo` when given.
struct PlacementRule {
  std::string sceneType;
  std::string parentCategory;
  std::string childCategory;
  std::optional<std::string> relativeTo;
  std::map<int, double> count;
  std::map<int, double> surface;  // SurfaceType::index() -> probability
  std::map<int, double> face;     // faceIndex() -> probability
  PositionSpec position;
  OrientationSpec orientation;
};

/// Generator input. JSON form:
/// {"formatVersion": 1, "sampling": "quasi"|"iid", "sceneTypes": {"office": 1.0},
///  "room": {"modelId": "room_a", "center": [0, 0, 1.5]},
///  "models": [ModelMetadata...], "taxonomy": {...}?,
///  "rules": [{"sceneType", "parent", "child", "relativeTo"?, "count": {"1": 0.5, "2": 0.5},
///             "surface": {"up-interior": 1.0}, "face": {"bottom": 1.0},
///             "position": {"mean": [x, y], "std": [sx, sy]} | {"radius": r, "radiusStd": s} | {"uniform": true},
///             "orientation": {"meanDeg": d, "stdDeg": s} | {"uniform": true}}]}
struct GeneratorSpec {
  CategoricalSampling sampling = CategoricalSampling::Quasi;
  std::map<std::string, double> sceneTypes;
  std::string roomModelId;
  std::optional<Vec3> roomCenter;  // default: floor at z = 0
  ModelDb models;
  CategoryTaxonomy taxonomy;
  std::vector<PlacementRule> rules;

  /// Throws Error(InvalidInput) for unnormalized categoricals, unknown
  /// categories, parents that are never generated, or surfaces the parent
  /// cannot offer.
  void validate() const;

  static GeneratorSpec fromJson(const nlohmann::json& j);
  nlohmann::json toJson() const;
};

/// The exact distributions the generator drew from, for recovery checks.
struct GeneratorTruth {
  using CountKey = std::tuple<std::string, std::string, std::string>;  // sceneType, parent, child
  std::map<CountKey, std::map<int, double>> counts;
  /// Child category -> P(surface); only for categories produced by one rule.
  std::map<std::string, std::array<double, SurfaceType::kCount>> surfaces;
  /// (child category, surface index) -> P(face)
  std::map<std::pair<std::string, int>, std::array<double, 6>> faces;

  struct Position {
    std::string objCategory;
    std::string refCategory;
    std::string sceneType;
    Relationship relationship = Relationship::ChildParent;
    SurfaceType surface;
    PositionSpec spec;
  };
  std::vector<Position> positions;

  nlohmann::json toJson() const;
};

struct GeneratedCorpus {
  Corpus corpus;
  GeneratorTruth truth;
};

/// Samples `sceneCount` scenes; identical (spec, sceneCount, seed) give
/// identical corpora.
GeneratedCorpus generateSyntheticCorpus(const GeneratorSpec& spec, int sceneCount, std::uint64_t seed);

}  // namespace scenehint
