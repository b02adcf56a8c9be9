#include "test_support.hpp"

#include "scenehint/scene_io.hpp"

#include <cmath>

namespace scenehint::testing {

std::filesystem::path dataDir() { return SCENEHINT_TEST_DATA; }

std::filesystem::path scratchDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("scenehint_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

GeneratorSpec loadOfficeSpec() { return GeneratorSpec::fromJson(readJsonFile(dataDir() / "office_spec.json")); }

const OfficeWorld& officeWorld() {
  static const OfficeWorld world = [] {
    OfficeWorld w;
    w.spec = loadOfficeSpec();
    w.generated = generateSyntheticCorpus(w.spec, 200, 7);
    const Corpus& c = w.generated.corpus;
    w.observations = extractObservations(c.scenes, c.models, c.taxonomy);
    w.priors = std::make_shared<const PriorsDB>(learnPriors(w.observations, c.taxonomy, c.models));
    w.models = std::make_shared<const ModelDb>(c.models);
    return w;
  }();
  return world;
}

ModelInstance floorInstance(const std::string& id, const ModelMetadata& meta, const Vec3& anchor, double yaw,
                            const std::string& parentId) {
  ModelInstance inst;
  inst.id = id;
  inst.modelId = meta.modelId;
  inst.transform = composePlacement(anchor, Vec3::UnitZ(), AttachmentFace::Bottom, yaw, meta);
  inst.parentId = parentId;
  return inst;
}

Scene officeScene(const ModelDb& models, const Vec3& deskAnchor, double deskYaw) {
  Scene scene;
  scene.id = "office_fixture";
  scene.sceneType = "office";
  scene.objects.push_back(roomInstance("room", models.at("room_a")));
  scene.objects.push_back(floorInstance("desk", models.at("desk_a"), deskAnchor, deskYaw, "room"));
  scene.supportEdges.emplace_back("desk", "room");
  return scene;
}

ModelMetadata boxModel(const std::string& modelId, const std::string& category, const Vec3& dims, const Vec3& up,
                       const Vec3& front) {
  ModelMetadata m;
  m.modelId = modelId;
  m.category = category;
  m.bboxDims = dims;
  m.up = up;
  m.front = front;
  m.name = modelId;
  return m;
}

ModelInstance roomInstance(const std::string& id, const ModelMetadata& meta) {
  ModelInstance room;
  room.id = id;
  room.modelId = meta.modelId;
  room.isArchitecture = true;
  room.transform = Transform::fromRotationTranslation(meta.alignment(), Vec3(0, 0, meta.canonicalHalfExtents().z()));
  return room;
}

double degrees(double r) { return r * 180.0 / kPi; }
double radians(double d) { return d * kPi / 180.0; }

double angularDistance(double a, double b) {
  const double d = wrapAngle(a - b);
  return std::min(d, kTwoPi - d);
}

}  // namespace scenehint::testing
