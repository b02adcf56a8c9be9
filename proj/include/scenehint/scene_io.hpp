#pragma once

#include "scenehint/model.hpp"
#include "scenehint/scene.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>

namespace scenehint {

inline constexpr int kSceneFormatVersion = 1;
inline constexpr int kModelDbFormatVersion = 1;

// Scene file:
//   {"formatVersion": 1, "id", "sceneType",
//    "objects": [{"id", "modelId", "transform": [16 numbers, column-major],
//                 "parentId"?, "isArchitecture"?}],
//    "supportEdges": [[childId, parentId], ...]}
//
// Model database file:
//   {"formatVersion": 1, "models": [{"modelId", "category", "up": [3], "front": [3],
//    "bboxDims": [3], "hasSemanticFront"?, "name"?, "tags"?, "description"?}]}
//
// All readers throw Error(Parse) for structurally bad documents and
// Error(FormatVersion) when the version is not the one above.

nlohmann::json toJson(const Transform& transform);
Transform transformFromJson(const nlohmann::json& j);

nlohmann::json toJson(const ModelInstance& instance);
ModelInstance instanceFromJson(const nlohmann::json& j);

nlohmann::json toJson(const Scene& scene);
Scene sceneFromJson(const nlohmann::json& j);

nlohmann::json toJson(const ModelMetadata& meta);
ModelMetadata modelFromJson(const nlohmann::json& j);

nlohmann::json toJson(const ModelDb& db);
ModelDb modelDbFromJson(const nlohmann::json& j);

nlohmann::json toJson(const Vec3& v);
Vec3 vec3FromJson(const nlohmann::json& j);

/// Reads and parses a JSON file; Error(Io) if unreadable, Error(Parse) if malformed.
nlohmann::json readJsonFile(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void writeJsonFile(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace scenehint
