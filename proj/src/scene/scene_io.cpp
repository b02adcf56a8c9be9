#include "scenehint/scene_io.hpp"

#include "scenehint/error.hpp"

#include <fstream>
#include <sstream>

namespace scenehint {

using nlohmann::json;

namespace {

[[noreturn]] void parseFail(const std::string& what) { throw Error(ErrorCode::Parse, what); }

const json& field(const json& j, const char* name, const std::string& context) {
  if (!j.is_object()) parseFail(context + ": expected an object");
  auto it = j.find(name);
  if (it == j.end()) parseFail(context + ": missing field '" + name + "'");
  return *it;
}

std::string stringField(const json& j, const char* name, const std::string& context) {
  const json& v = field(j, name, context);
  if (!v.is_string()) parseFail(context + ": field '" + name + "' must be a string");
  return v.get<std::string>();
}

void checkVersion(const json& j, int expected, const std::string& context) {
  const json& v = field(j, "formatVersion", context);
  if (!v.is_number_integer()) parseFail(context + ": formatVersion must be an integer");
  const int version = v.get<int>();
  if (version != expected) {
    throw Error(ErrorCode::FormatVersion, context + ": formatVersion " + std::to_string(version) +
                                              " is not supported (expected " +
                                              std::to_string(expected) + ")");
  }
}

}  // namespace

json toJson(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3FromJson(const json& j) {
  if (!j.is_array() || j.size() != 3) parseFail("expected an array of 3 numbers");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<std::size_t>(i)].is_number()) parseFail("expected an array of 3 numbers");
    v[i] = j[static_cast<std::size_t>(i)].get<double>();
  }
  return v;
}

json toJson(const Transform& transform) {
  const auto values = transform.columnMajor();
  return json(std::vector<double>(values.begin(), values.end()));
}

Transform transformFromJson(const json& j) {
  if (!j.is_array()) parseFail("transform must be an array of 16 numbers");
  if (j.size() != 16) {
    parseFail("transform must have 16 numbers, got " + std::to_string(j.size()));
  }
  std::vector<double> values;
  values.reserve(16);
  for (const auto& v : j) {
    if (!v.is_number()) parseFail("transform entries must be numbers");
    values.push_back(v.get<double>());
  }
  try {
    return Transform::fromColumnMajor(values);
  } catch (const Error& e) {
    parseFail(e.what());
  }
}

json toJson(const ModelInstance& instance) {
  json j = {{"id", instance.id}, {"modelId", instance.modelId}, {"transform", toJson(instance.transform)}};
  if (instance.parentId) j["parentId"] = *instance.parentId;
  if (instance.isArchitecture) j["isArchitecture"] = true;
  return j;
}

ModelInstance instanceFromJson(const json& j) {
  ModelInstance o;
  o.id = stringField(j, "id", "object");
  const std::string context = "object '" + o.id + "'";
  o.modelId = stringField(j, "modelId", context);
  try {
    o.transform = transformFromJson(field(j, "transform", context));
  } catch (const Error& e) {
    parseFail(context + ": " + e.what());
  }
  if (auto it = j.find("parentId"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) parseFail(context + ": parentId must be a string");
    o.parentId = it->get<std::string>();
  }
  if (auto it = j.find("isArchitecture"); it != j.end()) {
    if (!it->is_boolean()) parseFail(context + ": isArchitecture must be a boolean");
    o.isArchitecture = it->get<bool>();
  }
  return o;
}

json toJson(const Scene& scene) {
  json objects = json::array();
  for (const auto& o : scene.objects) objects.push_back(toJson(o));
  json edges = json::array();
  for (const auto& [child, parent] : scene.supportEdges) edges.push_back(json::array({child, parent}));
  return {{"formatVersion", kSceneFormatVersion},
          {"id", scene.id},
          {"sceneType", scene.sceneType},
          {"objects", std::move(objects)},
          {"supportEdges", std::move(edges)}};
}

Scene sceneFromJson(const json& j) {
  checkVersion(j, kSceneFormatVersion, "scene");
  Scene scene;
  scene.id = stringField(j, "id", "scene");
  const std::string context = "scene '" + scene.id + "'";
  scene.sceneType = stringField(j, "sceneType", context);
  const json& objects = field(j, "objects", context);
  if (!objects.is_array()) parseFail(context + ": objects must be an array");
  for (const auto& o : objects) scene.objects.push_back(instanceFromJson(o));
  if (auto it = j.find("supportEdges"); it != j.end()) {
    if (!it->is_array()) parseFail(context + ": supportEdges must be an array");
    for (const auto& e : *it) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        parseFail(context + ": each support edge must be [childId, parentId]");
      }
      scene.supportEdges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
  }
  return scene;
}

json toJson(const ModelMetadata& meta) {
  return {{"modelId", meta.modelId},
          {"category", meta.category},
          {"up", toJson(meta.up)},
          {"front", toJson(meta.front)},
          {"bboxDims", toJson(meta.bboxDims)},
          {"hasSemanticFront", meta.hasSemanticFront},
          {"name", meta.name},
          {"tags", meta.tags},
          {"description", meta.description},
          {"shapeClass", std::string(toString(meta.shapeClass()))}};
}

ModelMetadata modelFromJson(const json& j) {
  ModelMetadata m;
  m.modelId = stringField(j, "modelId", "model");
  const std::string context = "model '" + m.modelId + "'";
  m.category = stringField(j, "category", context);
  try {
    m.up = vec3FromJson(field(j, "up", context));
    m.front = vec3FromJson(field(j, "front", context));
    m.bboxDims = vec3FromJson(field(j, "bboxDims", context));
  } catch (const Error& e) {
    parseFail(context + ": " + e.what());
  }
  if (auto it = j.find("hasSemanticFront"); it != j.end()) {
    if (!it->is_boolean()) parseFail(context + ": hasSemanticFront must be a boolean");
    m.hasSemanticFront = it->get<bool>();
  }
  if (auto it = j.find("name"); it != j.end() && it->is_string()) m.name = it->get<std::string>();
  if (auto it = j.find("description"); it != j.end() && it->is_string()) {
    m.description = it->get<std::string>();
  }
  if (auto it = j.find("tags"); it != j.end()) {
    if (!it->is_array()) parseFail(context + ": tags must be an array of strings");
    for (const auto& t : *it) {
      if (!t.is_string()) parseFail(context + ": tags must be an array of strings");
      m.tags.push_back(t.get<std::string>());
    }
  }
  return m;
}

json toJson(const ModelDb& db) {
  json models = json::array();
  for (const auto& [id, m] : db.models()) models.push_back(toJson(m));
  return {{"formatVersion", kModelDbFormatVersion}, {"models", std::move(models)}};
}

ModelDb modelDbFromJson(const json& j) {
  checkVersion(j, kModelDbFormatVersion, "model database");
  const json& models = field(j, "models", "model database");
  if (!models.is_array()) parseFail("model database: models must be an array");
  ModelDb db;
  for (const auto& m : models) {
    ModelMetadata meta = modelFromJson(m);
    try {
      db.add(std::move(meta));
    } catch (const Error& e) {
      throw Error(ErrorCode::Validation, std::string("model database: ") + e.what());
    }
  }
  return db;
}

json readJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, path.string() + ": cannot open file");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, path.string() + ": " + e.what());
  }
}

void writeJsonFile(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, path.string() + ": cannot write file");
  out << j.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::Io, path.string() + ": write failed");
}

}  // namespace scenehint
