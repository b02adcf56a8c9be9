#include "scenehint/error.hpp"
#include "scenehint/priors.hpp"
#include "scenehint/scene_io.hpp"

#include <numeric>

namespace scenehint {

using nlohmann::json;

// Priors file:
//   {"formatVersion": 1, "backoffThreshold", "smoothingEpsilon", "taxonomy",
//    "categoryShapes": {cat: shape}, "architectureCategories": [...],
//    "countHists": [{"child", "parent", "sceneType", "counts": [[k, n], ...]}],
//    "supportCats": [{"category", "counts": [6]}],
//    "faceCats": [{"category", "surface", "counts": [6]}],
//    "relPos": [{key..., "radial", "bandwidth": [2], "samples": [[x, y], ...]}],
//    "relOrient": [{key..., "counts": [36]}]}
// nObs is implied by the counts and never stored.

namespace {

[[noreturn]] void corrupt(const std::string& what) { throw Error(ErrorCode::CorruptFile, "priors: " + what); }

const json& need(const json& j, const char* name) {
  if (!j.is_object()) corrupt("expected an object");
  auto it = j.find(name);
  if (it == j.end()) corrupt(std::string("missing field '") + name + "'");
  return *it;
}

std::string needString(const json& j, const char* name) {
  const json& v = need(j, name);
  if (!v.is_string()) corrupt(std::string("field '") + name + "' must be a string");
  return v.get<std::string>();
}

long needCount(const json& v) {
  if (!v.is_number_integer() || v.get<long>() < 0) corrupt("counts must be non-negative integers");
  return v.get<long>();
}

template <std::size_t N>
std::array<long, N> countArray(const json& j, long& total) {
  if (!j.is_array() || j.size() != N) corrupt("expected " + std::to_string(N) + " counts");
  std::array<long, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = needCount(j[i]);
  total = std::accumulate(out.begin(), out.end(), 0L);
  return out;
}

json relKeyJson(const RelKey& k) {
  return {{"obj", k.objCategory},
          {"ref", k.refCategory},
          {"sceneType", k.sceneType},
          {"relationship", std::string(toString(k.relationship))},
          {"surface", k.surface.toString()}};
}

RelKey relKeyFromJson(const json& j) {
  RelKey k;
  k.objCategory = needString(j, "obj");
  k.refCategory = needString(j, "ref");
  k.sceneType = needString(j, "sceneType");
  k.relationship = parseRelationship(needString(j, "relationship"));
  k.surface = SurfaceType::parse(needString(j, "surface"));
  return k;
}

double needPositive(const json& v) {
  if (!v.is_number() || !(v.get<double>() > 0.0)) corrupt("expected a positive number");
  return v.get<double>();
}

}  // namespace

json PriorsDB::toJson() const {
  json j;
  j["formatVersion"] = kPriorsFormatVersion;
  j["backoffThreshold"] = settings.backoffThreshold;
  j["smoothingEpsilon"] = settings.smoothingEpsilon;
  j["taxonomy"] = taxonomy.toJson();
  json shapes = json::object();
  for (const auto& [cat, shape] : categoryShapes) shapes[cat] = std::string(scenehint::toString(shape));
  j["categoryShapes"] = shapes;
  j["architectureCategories"] = json(std::vector<std::string>(architectureCategories.begin(), architectureCategories.end()));

  json counts = json::array();
  for (const auto& [key, h] : countHists) {
    json pairs = json::array();
    for (const auto& [k, n] : h.counts) pairs.push_back({k, n});
    counts.push_back({{"child", key.child}, {"parent", key.parent}, {"sceneType", key.sceneType}, {"counts", pairs}});
  }
  j["countHists"] = counts;

  json support = json::array();
  for (const auto& [cat, c] : supportCats) support.push_back({{"category", cat}, {"counts", c.counts}});
  j["supportCats"] = support;

  json faces = json::array();
  for (const auto& [key, c] : faceCats) {
    faces.push_back({{"category", key.category}, {"surface", key.surface.toString()}, {"counts", c.counts}});
  }
  j["faceCats"] = faces;

  json pos = json::array();
  for (const auto& [key, kde] : relPos) {
    json entry = relKeyJson(key);
    entry["radial"] = kde.radial;
    entry["bandwidth"] = {kde.bandwidth.x(), kde.bandwidth.y()};
    json samples = json::array();
    for (const Vec2& s : kde.samples) samples.push_back({s.x(), s.y()});
    entry["samples"] = samples;
    pos.push_back(entry);
  }
  j["relPos"] = pos;

  json orient = json::array();
  for (const auto& [key, h] : relOrient) {
    json entry = relKeyJson(key);
    entry["counts"] = h.counts;
    orient.push_back(entry);
  }
  j["relOrient"] = orient;
  return j;
}

PriorsDB PriorsDB::fromJson(const json& j) {
  if (!j.is_object()) corrupt("expected an object");
  const json& version = need(j, "formatVersion");
  if (!version.is_number_integer()) corrupt("formatVersion must be an integer");
  if (version.get<int>() != kPriorsFormatVersion) {
    throw Error(ErrorCode::FormatVersion, "priors: formatVersion " + std::to_string(version.get<int>()) +
                                              " is not supported (expected " +
                                              std::to_string(kPriorsFormatVersion) + ")");
  }

  PriorsDB db;
  try {
    const json& threshold = need(j, "backoffThreshold");
    if (!threshold.is_number_integer() || threshold.get<int>() < 1) corrupt("backoffThreshold must be >= 1");
    db.settings.backoffThreshold = threshold.get<int>();
    db.settings.smoothingEpsilon = needPositive(need(j, "smoothingEpsilon"));
    db.taxonomy = CategoryTaxonomy::fromJson(need(j, "taxonomy"));

    const json& shapes = need(j, "categoryShapes");
    if (!shapes.is_object()) corrupt("categoryShapes must be an object");
    for (const auto& [cat, shape] : shapes.items()) {
      if (!shape.is_string()) corrupt("shape class must be a string");
      db.categoryShapes[cat] = parseShapeClass(shape.get<std::string>());
    }
    for (const auto& cat : need(j, "architectureCategories")) {
      if (!cat.is_string()) corrupt("architectureCategories must hold strings");
      db.architectureCategories.insert(cat.get<std::string>());
    }

    for (const auto& e : need(j, "countHists")) {
      CountHistogram h;
      for (const auto& pair : need(e, "counts")) {
        if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer()) corrupt("bad count pair");
        const int k = pair[0].get<int>();
        if (k < 0 || h.counts.count(k) != 0) corrupt("bad or repeated count value");
        const long n = needCount(pair[1]);
        if (n == 0) corrupt("empty count bin");
        h.counts[k] = n;
        h.nObs += n;
      }
      if (h.nObs == 0) corrupt("count histogram without observations");
      CountKey key{needString(e, "child"), needString(e, "parent"), needString(e, "sceneType")};
      if (!db.countHists.emplace(std::move(key), std::move(h)).second) corrupt("duplicate count entry");
    }

    for (const auto& e : need(j, "supportCats")) {
      SurfaceCategorical c;
      c.counts = countArray<SurfaceType::kCount>(need(e, "counts"), c.nObs);
      if (c.nObs == 0) corrupt("support entry without observations");
      if (!db.supportCats.emplace(needString(e, "category"), c).second) corrupt("duplicate support entry");
    }

    for (const auto& e : need(j, "faceCats")) {
      FaceCategorical c;
      c.counts = countArray<6>(need(e, "counts"), c.nObs);
      if (c.nObs == 0) corrupt("face entry without observations");
      FaceKey key{needString(e, "category"), SurfaceType::parse(needString(e, "surface"))};
      if (!db.faceCats.emplace(std::move(key), c).second) corrupt("duplicate face entry");
    }

    for (const auto& e : need(j, "relPos")) {
      RelPosKde kde;
      const json& radial = need(e, "radial");
      if (!radial.is_boolean()) corrupt("radial must be a boolean");
      kde.radial = radial.get<bool>();
      const json& bw = need(e, "bandwidth");
      if (!bw.is_array() || bw.size() != 2) corrupt("bandwidth must have 2 entries");
      kde.bandwidth = Vec2(needPositive(bw[0]), needPositive(bw[1]));
      for (const auto& s : need(e, "samples")) {
        if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number()) corrupt("bad sample");
        kde.samples.emplace_back(s[0].get<double>(), s[1].get<double>());
      }
      kde.nObs = static_cast<long>(kde.samples.size());
      if (kde.nObs == 0) corrupt("position entry without samples");
      if (!db.relPos.emplace(relKeyFromJson(e), std::move(kde)).second) corrupt("duplicate position entry");
    }

    for (const auto& e : need(j, "relOrient")) {
      WrappedHistogram h;
      h.counts = countArray<kOrientationBins>(need(e, "counts"), h.nObs);
      if (h.nObs == 0) corrupt("orientation entry without observations");
      if (!db.relOrient.emplace(relKeyFromJson(e), h).second) corrupt("duplicate orientation entry");
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::CorruptFile) throw;
    corrupt(e.what());
  } catch (const json::exception& e) {
    corrupt(e.what());
  }

  for (const auto& [key, kde] : db.relPos) {
    auto it = db.relOrient.find(key);
    if (it == db.relOrient.end() || it->second.nObs != kde.nObs) {
      corrupt("position and orientation entries disagree for " + key.objCategory + "/" + key.refCategory);
    }
  }
  if (db.relOrient.size() != db.relPos.size()) corrupt("orientation entry without a position entry");
  return db;
}

void savePriors(const PriorsDB& db, const std::filesystem::path& path) { writeJsonFile(path, db.toJson()); }

PriorsDB loadPriors(const std::filesystem::path& path) {
  json j;
  try {
    j = readJsonFile(path);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Io) throw;
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
  try {
    return PriorsDB::fromJson(j);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace scenehint
