#include "scenehint/synthetic.hpp"

#include "scenehint/error.hpp"
#include "scenehint/scene_io.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace scenehint {

using nlohmann::json;

namespace {

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::InvalidInput, "generator spec: " + what); }

template <typename Key>
void checkCategorical(const std::map<Key, double>& probs, const std::string& what) {
  if (probs.empty()) invalid(what + " is empty");
  double sum = 0.0;
  for (const auto& [k, p] : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) invalid(what + " has a negative or non-finite probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) invalid(what + " sums to " + std::to_string(sum) + ", not 1");
}

// ---------------------------------------------------------------------------
// Random sources

class Uniform01 {
 public:
  explicit Uniform01(std::uint64_t seed) : engine_(seed) {}

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double gaussian(double mean, double stddev) {
    // Box-Muller on raw engine output keeps streams identical across standard libraries.
    const double u1 = 1.0 - next();
    const double u2 = next();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  std::size_t index(std::size_t n) { return std::min(n - 1, static_cast<std::size_t>(next() * static_cast<double>(n))); }

 private:
  std::mt19937_64 engine_;
};

std::vector<int> firstPrimes(std::size_t n) {
  std::vector<int> primes;
  for (int c = 2; primes.size() < n; ++c) {
    bool prime = true;
    for (int p : primes) {
      if (p * p > c) break;
      if (c % p == 0) {
        prime = false;
        break;
      }
    }
    if (prime) primes.push_back(c);
  }
  return primes;
}

/// u_i = frac(offset + i * frac(sqrt(prime))); distinct primes keep streams independent.
class CategoricalStream {
 public:
  CategoricalStream(CategoricalSampling mode, int prime, double offset, Uniform01* iid)
      : mode_(mode), increment_(std::sqrt(static_cast<double>(prime)) - std::floor(std::sqrt(static_cast<double>(prime)))),
        offset_(offset), iid_(iid) {}

  double next() {
    if (mode_ == CategoricalSampling::Iid) return iid_->next();
    const double v = offset_ + static_cast<double>(index_++) * increment_;
    return v - std::floor(v);
  }

  template <typename Key>
  Key draw(const std::map<Key, double>& probs) {
    const double u = next();
    double acc = 0.0;
    for (const auto& [k, p] : probs) {
      acc += p;
      if (u < acc) return k;
    }
    for (auto it = probs.rbegin(); it != probs.rend(); ++it) {
      if (it->second > 0.0) return it->first;
    }
    return probs.rbegin()->first;
  }

 private:
  CategoricalSampling mode_;
  double increment_;
  double offset_;
  std::uint64_t index_ = 0;
  Uniform01* iid_;
};

// ---------------------------------------------------------------------------
// JSON helpers

std::map<int, double> surfaceMapFromJson(const json& j, const std::string& what) {
  if (!j.is_object()) invalid(what + " must be an object");
  std::map<int, double> out;
  for (const auto& [name, p] : j.items()) {
    if (!p.is_number()) invalid(what + " probabilities must be numbers");
    out[SurfaceType::parse(name).index()] = p.get<double>();
  }
  return out;
}

std::map<int, double> faceMapFromJson(const json& j, const std::string& what) {
  if (!j.is_object()) invalid(what + " must be an object");
  std::map<int, double> out;
  for (const auto& [name, p] : j.items()) {
    if (!p.is_number()) invalid(what + " probabilities must be numbers");
    out[faceIndex(parseFace(name))] = p.get<double>();
  }
  return out;
}

std::map<int, double> countMapFromJson(const json& j, const std::string& what) {
  if (!j.is_object()) invalid(what + " must be an object");
  std::map<int, double> out;
  for (const auto& [name, p] : j.items()) {
    if (!p.is_number()) invalid(what + " probabilities must be numbers");
    int k = 0;
    try {
      std::size_t used = 0;
      k = std::stoi(name, &used);
      if (used != name.size() || k < 0) throw std::invalid_argument(name);
    } catch (const std::exception&) {
      invalid(what + " keys must be nonnegative integers, got '" + name + "'");
    }
    out[k] = p.get<double>();
  }
  return out;
}

double numberOr(const json& j, const char* name, double fallback) {
  auto it = j.find(name);
  if (it == j.end()) return fallback;
  if (!it->is_number()) invalid(std::string(name) + " must be a number");
  return it->get<double>();
}

Vec2 vec2Field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) return Vec2::Zero();
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    invalid(std::string(name) + " must be [x, y]");
  }
  return Vec2((*it)[0].get<double>(), (*it)[1].get<double>());
}

std::string stringField(const json& j, const char* name, const std::string& context) {
  auto it = j.find(name);
  if (it == j.end() || !it->is_string()) invalid(context + ": missing string field '" + name + "'");
  return it->get<std::string>();
}

// ---------------------------------------------------------------------------
// Scene construction

struct SurfaceChoice {
  AttachmentFace parentFace;
  Vec3 normal;
  Vec3 center;
  int axisU;
  int axisV;
};

std::vector<SurfaceChoice> surfacesOfType(const OrientedBox& box, bool isArchitecture, SurfaceType wanted) {
  std::vector<SurfaceChoice> out;
  for (AttachmentFace f : kAllFaces) {
    const Vec3 normal = isArchitecture ? Vec3(-box.faceNormal(f)) : box.faceNormal(f);
    if (featurizeSurface(normal.normalized(), isArchitecture) != wanted) continue;
    const int axis = faceAxis(f);
    out.push_back({f, normal.normalized(), box.faceCenter(f), (axis + 1) % 3, (axis + 2) % 3});
  }
  return out;
}

Vec3 clampToSurface(const Vec3& p, const OrientedBox& box, const SurfaceChoice& s) {
  const Vec3 offset = p - s.center;
  Vec3 out = s.center;
  for (int axis : {s.axisU, s.axisV}) {
    const Vec3& dir = box.axes[static_cast<std::size_t>(axis)];
    const double half = box.halfExtents[axis];
    const double margin = std::min(0.02, 0.5 * half);
    out += dir * std::clamp(offset.dot(dir), -(half - margin), half - margin);
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// GeneratorSpec

void GeneratorSpec::validate() const {
  checkCategorical(sceneTypes, "sceneTypes");
  const ModelMetadata* room = models.find(roomModelId);
  if (room == nullptr) invalid("room model '" + roomModelId + "' is not in the model list");

  std::set<std::string> available = {room->category};
  for (std::size_t i = 0; i < rules.size(); ++i) {
    const PlacementRule& r = rules[i];
    const std::string what = "rule " + std::to_string(i) + " (" + r.parentCategory + " -> " + r.childCategory + ")";
    if (sceneTypes.count(r.sceneType) == 0) invalid(what + ": unknown sceneType '" + r.sceneType + "'");
    if (models.modelsInCategory(r.childCategory).empty()) invalid(what + ": no models of category '" + r.childCategory + "'");
    if (available.count(r.parentCategory) == 0) invalid(what + ": parent category is not generated by an earlier rule");
    checkCategorical(r.count, what + " count");
    checkCategorical(r.surface, what + " surface");
    checkCategorical(r.face, what + " face");
    const bool parentIsRoom = r.parentCategory == room->category;
    for (const auto& [idx, p] : r.surface) {
      if (p <= 0.0) continue;
      const SurfaceType t = SurfaceType::fromIndex(idx);
      if ((t.interiority == Interiority::Interior) != parentIsRoom) {
        invalid(what + ": parent cannot offer surface " + t.toString());
      }
    }
    if (r.position.kind == PositionSpec::Kind::Gaussian &&
        (r.position.stddev.minCoeff() < 0.0 || !r.position.mean.allFinite())) {
      invalid(what + ": bad position distribution");
    }
    if (r.orientation.stddev < 0.0) invalid(what + ": negative orientation std");
    available.insert(r.childCategory);
  }
}

GeneratorSpec GeneratorSpec::fromJson(const json& j) {
  if (!j.is_object()) invalid("expected an object");
  auto version = j.find("formatVersion");
  if (version == j.end() || !version->is_number_integer()) invalid("missing integer formatVersion");
  if (version->get<int>() != 1) {
    throw Error(ErrorCode::FormatVersion, "generator spec: formatVersion " + std::to_string(version->get<int>()) +
                                              " is not supported (expected 1)");
  }
  GeneratorSpec spec;
  if (auto it = j.find("sampling"); it != j.end()) {
    const std::string mode = it->is_string() ? it->get<std::string>() : "";
    if (mode == "quasi") {
      spec.sampling = CategoricalSampling::Quasi;
    } else if (mode == "iid") {
      spec.sampling = CategoricalSampling::Iid;
    } else {
      invalid("sampling must be \"quasi\" or \"iid\"");
    }
  }
  auto sceneTypes = j.find("sceneTypes");
  if (sceneTypes == j.end() || !sceneTypes->is_object()) invalid("sceneTypes must be an object");
  for (const auto& [name, p] : sceneTypes->items()) {
    if (!p.is_number()) invalid("sceneTypes probabilities must be numbers");
    spec.sceneTypes[name] = p.get<double>();
  }
  auto room = j.find("room");
  if (room == j.end() || !room->is_object()) invalid("missing room object");
  spec.roomModelId = stringField(*room, "modelId", "room");
  if (auto c = room->find("center"); c != room->end()) spec.roomCenter = vec3FromJson(*c);

  auto models = j.find("models");
  if (models == j.end() || !models->is_array()) invalid("models must be an array");
  for (const auto& m : *models) spec.models.add(modelFromJson(m));
  if (auto t = j.find("taxonomy"); t != j.end()) spec.taxonomy = CategoryTaxonomy::fromJson(*t);

  auto rules = j.find("rules");
  if (rules == j.end() || !rules->is_array()) invalid("rules must be an array");
  for (const auto& rj : *rules) {
    PlacementRule r;
    r.sceneType = stringField(rj, "sceneType", "rule");
    r.parentCategory = stringField(rj, "parent", "rule");
    r.childCategory = stringField(rj, "child", "rule");
    const std::string what = "rule " + r.parentCategory + " -> " + r.childCategory;
    if (auto it = rj.find("relativeTo"); it != rj.end() && !it->is_null()) r.relativeTo = it->get<std::string>();
    if (!rj.contains("count")) invalid(what + ": missing count");
    r.count = countMapFromJson(rj["count"], what + " count");
    r.surface = rj.contains("surface") ? surfaceMapFromJson(rj["surface"], what + " surface") : std::map<int, double>{};
    r.face = rj.contains("face") ? faceMapFromJson(rj["face"], what + " face")
                                 : std::map<int, double>{{faceIndex(AttachmentFace::Bottom), 1.0}};
    if (auto it = rj.find("position"); it != rj.end()) {
      const json& p = *it;
      if (p.contains("mean")) {
        r.position.kind = PositionSpec::Kind::Gaussian;
        r.position.mean = vec2Field(p, "mean");
        r.position.stddev = vec2Field(p, "std");
      } else if (p.contains("radius")) {
        r.position.kind = PositionSpec::Kind::Radial;
        r.position.radiusMean = numberOr(p, "radius", 0.0);
        r.position.radiusStd = numberOr(p, "radiusStd", 0.0);
      } else {
        r.position.kind = PositionSpec::Kind::Uniform;
      }
    }
    if (auto it = rj.find("orientation"); it != rj.end() && it->contains("meanDeg")) {
      r.orientation.uniform = false;
      r.orientation.mean = numberOr(*it, "meanDeg", 0.0) * kPi / 180.0;
      r.orientation.stddev = numberOr(*it, "stdDeg", 0.0) * kPi / 180.0;
    }
    spec.rules.push_back(std::move(r));
  }
  spec.validate();
  return spec;
}

json GeneratorSpec::toJson() const {
  json rulesJson = json::array();
  for (const auto& r : rules) {
    json count = json::object();
    for (const auto& [k, p] : r.count) count[std::to_string(k)] = p;
    json surface = json::object();
    for (const auto& [k, p] : r.surface) surface[SurfaceType::fromIndex(k).toString()] = p;
    json face = json::object();
    for (const auto& [k, p] : r.face) face[std::string(toString(static_cast<AttachmentFace>(k)))] = p;
    json position;
    switch (r.position.kind) {
      case PositionSpec::Kind::Gaussian:
        position = {{"mean", {r.position.mean.x(), r.position.mean.y()}},
                    {"std", {r.position.stddev.x(), r.position.stddev.y()}}};
        break;
      case PositionSpec::Kind::Radial:
        position = {{"radius", r.position.radiusMean}, {"radiusStd", r.position.radiusStd}};
        break;
      case PositionSpec::Kind::Uniform: position = {{"uniform", true}}; break;
    }
    json orientation = r.orientation.uniform
                           ? json{{"uniform", true}}
                           : json{{"meanDeg", r.orientation.mean * 180.0 / kPi},
                                  {"stdDeg", r.orientation.stddev * 180.0 / kPi}};
    json rj = {{"sceneType", r.sceneType}, {"parent", r.parentCategory}, {"child", r.childCategory},
               {"count", count}, {"surface", surface}, {"face", face},
               {"position", position}, {"orientation", orientation}};
    if (r.relativeTo) rj["relativeTo"] = *r.relativeTo;
    rulesJson.push_back(std::move(rj));
  }
  json modelsJson = json::array();
  for (const auto& [id, m] : models.models()) modelsJson.push_back(scenehint::toJson(m));
  json roomJson = {{"modelId", roomModelId}};
  if (roomCenter) roomJson["center"] = scenehint::toJson(*roomCenter);
  return {{"formatVersion", 1},
          {"sampling", sampling == CategoricalSampling::Quasi ? "quasi" : "iid"},
          {"sceneTypes", sceneTypes},
          {"room", roomJson},
          {"models", modelsJson},
          {"taxonomy", taxonomy.toJson()},
          {"rules", rulesJson}};
}

// ---------------------------------------------------------------------------
// GeneratorTruth

json GeneratorTruth::toJson() const {
  json countsJson = json::array();
  for (const auto& [key, probs] : counts) {
    json p = json::object();
    for (const auto& [k, v] : probs) p[std::to_string(k)] = v;
    countsJson.push_back({{"sceneType", std::get<0>(key)}, {"parent", std::get<1>(key)},
                          {"child", std::get<2>(key)}, {"probs", p}});
  }
  json surfacesJson = json::array();
  for (const auto& [category, probs] : surfaces) {
    json p = json::object();
    for (int i = 0; i < SurfaceType::kCount; ++i) {
      if (probs[static_cast<std::size_t>(i)] > 0.0) p[SurfaceType::fromIndex(i).toString()] = probs[static_cast<std::size_t>(i)];
    }
    surfacesJson.push_back({{"category", category}, {"probs", p}});
  }
  json facesJson = json::array();
  for (const auto& [key, probs] : faces) {
    json p = json::object();
    for (AttachmentFace f : kAllFaces) {
      if (probs[static_cast<std::size_t>(faceIndex(f))] > 0.0) p[std::string(toString(f))] = probs[static_cast<std::size_t>(faceIndex(f))];
    }
    facesJson.push_back({{"category", key.first}, {"surface", SurfaceType::fromIndex(key.second).toString()}, {"probs", p}});
  }
  json positionsJson = json::array();
  for (const auto& pos : positions) {
    json pj = {{"obj", pos.objCategory}, {"ref", pos.refCategory}, {"sceneType", pos.sceneType},
               {"relationship", std::string(scenehint::toString(pos.relationship))},
               {"surface", pos.surface.toString()}};
    if (pos.spec.kind == PositionSpec::Kind::Gaussian) {
      pj["mean"] = {pos.spec.mean.x(), pos.spec.mean.y()};
      pj["std"] = {pos.spec.stddev.x(), pos.spec.stddev.y()};
    } else if (pos.spec.kind == PositionSpec::Kind::Radial) {
      pj["radius"] = pos.spec.radiusMean;
      pj["radiusStd"] = pos.spec.radiusStd;
    } else {
      pj["uniform"] = true;
    }
    positionsJson.push_back(std::move(pj));
  }
  return {{"counts", countsJson}, {"surfaces", surfacesJson}, {"faces", facesJson}, {"positions", positionsJson}};
}

// ---------------------------------------------------------------------------
// Generation

namespace {

GeneratorTruth truthOf(const GeneratorSpec& spec) {
  GeneratorTruth truth;
  std::map<std::string, int> rulesPerChild;
  for (const auto& r : spec.rules) ++rulesPerChild[r.childCategory];
  for (const auto& r : spec.rules) {
    truth.counts[{r.sceneType, r.parentCategory, r.childCategory}] = r.count;
    if (rulesPerChild[r.childCategory] == 1) {
      std::array<double, SurfaceType::kCount> s{};
      for (const auto& [idx, p] : r.surface) s[static_cast<std::size_t>(idx)] = p;
      truth.surfaces[r.childCategory] = s;
      for (const auto& [idx, p] : r.surface) {
        if (p <= 0.0) continue;
        std::array<double, 6> f{};
        for (const auto& [fi, fp] : r.face) f[static_cast<std::size_t>(fi)] = fp;
        truth.faces[{r.childCategory, idx}] = f;
      }
    }
    for (const auto& [idx, p] : r.surface) {
      if (p <= 0.0) continue;
      GeneratorTruth::Position pos;
      pos.objCategory = r.childCategory;
      pos.refCategory = r.relativeTo.value_or(r.parentCategory);
      pos.sceneType = r.sceneType;
      pos.relationship = r.relativeTo ? Relationship::Sibling : Relationship::ChildParent;
      pos.surface = SurfaceType::fromIndex(idx);
      pos.spec = r.position;
      truth.positions.push_back(pos);
    }
  }
  return truth;
}

}  // namespace

GeneratedCorpus generateSyntheticCorpus(const GeneratorSpec& spec, int sceneCount, std::uint64_t seed) {
  spec.validate();
  if (sceneCount < 0) throw Error(ErrorCode::InvalidInput, "scene count must be nonnegative");

  Uniform01 rng(seed);
  const std::vector<int> primes = firstPrimes(1 + 3 * spec.rules.size());
  auto makeStream = [&](std::size_t i) { return CategoricalStream(spec.sampling, primes[i], rng.next(), &rng); };
  CategoricalStream sceneTypeStream = makeStream(0);
  std::vector<std::array<CategoricalStream, 3>> ruleStreams;  // count, surface, face
  for (std::size_t r = 0; r < spec.rules.size(); ++r) {
    ruleStreams.push_back({makeStream(1 + 3 * r), makeStream(2 + 3 * r), makeStream(3 + 3 * r)});
  }

  const ModelMetadata& roomMeta = spec.models.at(spec.roomModelId);
  const Vec3 roomCenter = spec.roomCenter.value_or(Vec3(0.0, 0.0, roomMeta.canonicalHalfExtents().z()));

  GeneratedCorpus out;
  out.corpus.models = spec.models;
  out.corpus.taxonomy = spec.taxonomy;
  out.truth = truthOf(spec);

  const int digits = std::max<int>(4, static_cast<int>(std::to_string(sceneCount).size()));
  for (int s = 0; s < sceneCount; ++s) {
    Scene scene;
    std::string number = std::to_string(s);
    scene.id = "synth_" + std::string(static_cast<std::size_t>(digits) - number.size(), '0') + number;
    scene.sceneType = sceneTypeStream.draw(spec.sceneTypes);

    ModelInstance room;
    room.id = "room";
    room.modelId = spec.roomModelId;
    room.transform = Transform::fromRotationTranslation(Mat3::Identity(), roomCenter);
    room.isArchitecture = true;
    scene.objects.push_back(room);

    std::map<std::string, int> perCategoryCounter;
    for (std::size_t r = 0; r < spec.rules.size(); ++r) {
      const PlacementRule& rule = spec.rules[r];
      if (rule.sceneType != scene.sceneType) continue;

      std::vector<std::string> parentIds;
      for (const auto& o : scene.objects) {
        if (spec.models.at(o.modelId).category == rule.parentCategory) parentIds.push_back(o.id);
      }
      for (const auto& parentId : parentIds) {
        const int k = ruleStreams[r][0].draw(rule.count);
        for (int c = 0; c < k; ++c) {
          const ModelInstance parent = *scene.find(parentId);
          const ModelMetadata& parentMeta = spec.models.at(parent.modelId);
          const OrientedBox parentBox = instanceBox(parent, parentMeta);

          const SurfaceType surfaceType = SurfaceType::fromIndex(ruleStreams[r][1].draw(rule.surface));
          const AttachmentFace face = static_cast<AttachmentFace>(ruleStreams[r][2].draw(rule.face));
          const auto surfaces = surfacesOfType(parentBox, parent.isArchitecture, surfaceType);
          if (surfaces.empty()) {
            throw Error(ErrorCode::InvalidInput, "generator: '" + parentId + "' offers no " + surfaceType.toString() + " surface");
          }
          const SurfaceChoice& surface = surfaces[rng.index(surfaces.size())];

          const auto models = spec.models.modelsInCategory(rule.childCategory);
          const ModelMetadata& meta = *models[rng.index(models.size())];

          // Reference: the anchor sibling when present, else the parent.
          PoseAxes refAxes = instanceAxes(parent, parentMeta);
          if (rule.relativeTo) {
            for (const ModelInstance* sibling : scene.childrenOf(parentId)) {
              if (spec.models.at(sibling->modelId).category == *rule.relativeTo) {
                refAxes = instanceAxes(*sibling, spec.models.at(sibling->modelId));
                break;
              }
            }
          }

          Vec3 anchor;
          switch (rule.position.kind) {
            case PositionSpec::Kind::Gaussian: {
              const Vec2 delta(rng.gaussian(rule.position.mean.x(), rule.position.stddev.x()),
                               rng.gaussian(rule.position.mean.y(), rule.position.stddev.y()));
              anchor = pointAtDelta(refAxes, surface.center, surface.normal, surfaceType.normalClass, delta);
              break;
            }
            case PositionSpec::Kind::Radial: {
              const double radius = std::abs(rng.gaussian(rule.position.radiusMean, rule.position.radiusStd));
              const double phi = kTwoPi * rng.next();
              anchor = pointAtDelta(refAxes, surface.center, surface.normal, surfaceType.normalClass,
                                    Vec2(radius * std::cos(phi), radius * std::sin(phi)));
              break;
            }
            case PositionSpec::Kind::Uniform: {
              const double u = rng.next() * 2.0 - 1.0;
              const double v = rng.next() * 2.0 - 1.0;
              anchor = surface.center +
                       parentBox.axes[static_cast<std::size_t>(surface.axisU)] * u * parentBox.halfExtents[surface.axisU] +
                       parentBox.axes[static_cast<std::size_t>(surface.axisV)] * v * parentBox.halfExtents[surface.axisV];
              break;
            }
          }
          anchor = clampToSurface(anchor, parentBox, surface);

          const double desiredTheta =
              rule.orientation.uniform ? kTwoPi * rng.next()
                                       : rng.gaussian(rule.orientation.mean, rule.orientation.stddev);
          const Transform atZero = composePlacement(anchor, surface.normal, face, 0.0, meta);
          ModelInstance probe{"", meta.modelId, atZero, std::nullopt, false};
          const double theta0 =
              relativePose(instanceAxes(probe, meta), refAxes, surface.normal, surfaceType.normalClass).theta;

          ModelInstance child;
          child.id = rule.childCategory + "_" + std::to_string(++perCategoryCounter[rule.childCategory]);
          child.modelId = meta.modelId;
          child.transform = composePlacement(anchor, surface.normal, face, wrapAngle(desiredTheta - theta0), meta);
          child.parentId = parentId;
          scene.supportEdges.emplace_back(child.id, parentId);
          scene.objects.push_back(std::move(child));
        }
      }
    }
    out.corpus.scenes.push_back(std::move(scene));
  }
  return out;
}

}  // namespace scenehint
