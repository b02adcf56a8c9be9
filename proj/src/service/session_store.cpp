#include "scenehint/service.hpp"

#include "scenehint/corpus.hpp"
#include "scenehint/error.hpp"
#include "scenehint/scene_io.hpp"
#include "scenehint/suggest.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <set>

namespace scenehint {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Event log

namespace {

std::string utcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace

EventLog::EventLog(std::ostream& out, Clock clock) : out_(out), clock_(clock ? std::move(clock) : Clock(utcNow)) {}

void EventLog::write(const std::string& sessionId, const std::string& op, const json& payload) {
  std::lock_guard lock(mutex_);
  const json line = {{"ts", clock_()}, {"sessionId", sessionId}, {"op", op}, {"payload", payload}};
  out_ << line.dump() << '\n';
  out_.flush();
}

// ---------------------------------------------------------------------------
// Request parsing

namespace {

[[noreturn]] void badRequest(const std::string& what) { throw ServiceError(400, what); }
[[noreturn]] void unprocessable(const std::string& what) { throw ServiceError(422, what); }

void requireObject(const json& body) {
  if (!body.is_object()) badRequest("request body must be a JSON object");
}

std::string requireString(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || !it->is_string()) badRequest(std::string("field '") + name + "' must be a string");
  return it->get<std::string>();
}

std::optional<Vec3> optionalVec3(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) return std::nullopt;
  try {
    Vec3 v = vec3FromJson(*it);
    if (!v.allFinite()) badRequest(std::string("field '") + name + "' must be finite");
    return v;
  } catch (const Error&) {
    badRequest(std::string("field '") + name + "' must be an array of 3 numbers");
  }
}

std::optional<double> optionalNumber(const json& body, const char* name) {
  auto it = body.find(name);
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (!it->is_number() || !std::isfinite(it->get<double>())) badRequest(std::string("field '") + name + "' must be a number");
  return it->get<double>();
}

int statusFor(const Error& e) {
  switch (e.code()) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Validation: return 422;
    default: return 400;
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

/// Alpha that makes composePlacement reproduce the object's current in-plane heading.
double recoverAlpha(const ModelInstance& obj, const ModelMetadata& meta, const StoredPlacement& p,
                    NormalClass cls) {
  ModelInstance zero = obj;
  zero.transform = composePlacement(p.anchor, p.surfaceNormal, p.face, 0.0, meta);
  const PoseAxes a0 = instanceAxes(zero, meta);
  const PoseAxes ac = instanceAxes(obj, meta);
  const Vec3 h0 = inPlaneHeading(a0.front, a0.up, p.surfaceNormal, cls);
  const Vec3 hc = inPlaneHeading(ac.front, ac.up, p.surfaceNormal, cls);
  return wrapAngle(std::atan2(h0.cross(hc).dot(p.surfaceNormal), h0.dot(hc)));
}

}  // namespace

// ---------------------------------------------------------------------------
// Sessions

SessionStore::SessionStore(std::shared_ptr<const PriorsDB> priors, std::shared_ptr<const ModelDb> models, EventLog* log)
    : priors_(std::move(priors)), models_(std::move(models)), log_(log) {}

std::shared_ptr<Session> SessionStore::find(const std::string& sessionId) const {
  std::shared_lock lock(sessionsMutex_);
  auto it = sessions_.find(sessionId);
  if (it == sessions_.end()) throw ServiceError(404, "unknown session '" + sessionId + "'");
  return it->second;
}

void SessionStore::log(const std::string& sessionId, const std::string& op, const json& payload) {
  if (log_ != nullptr) log_->write(sessionId, op, payload);
}

json SessionStore::createSession(const json& body) {
  requireObject(body);
  const std::string sceneType = requireString(body, "sceneType");
  if (sceneType.empty()) badRequest("sceneType must not be empty");

  Scene scene;
  if (auto it = body.find("scene"); it != body.end() && !it->is_null()) {
    try {
      scene = sceneFromJson(*it);
      validateScene(scene, *models_, "scene");
    } catch (const Error& e) {
      badRequest(e.what());
    }
  } else if (auto room = body.find("roomModelId"); room != body.end() && !room->is_null()) {
    if (!room->is_string()) badRequest("roomModelId must be a string");
    const ModelMetadata* meta = models_->find(room->get<std::string>());
    if (meta == nullptr) badRequest("unknown roomModelId '" + room->get<std::string>() + "'");
    ModelInstance inst;
    inst.id = "room";
    inst.modelId = meta->modelId;
    inst.isArchitecture = true;
    inst.transform =
        Transform::fromRotationTranslation(meta->alignment(), Vec3(0.0, 0.0, meta->canonicalHalfExtents().z()));
    scene.objects.push_back(std::move(inst));
  }
  scene.sceneType = sceneType;

  auto session = std::make_shared<Session>();
  std::string id;
  {
    std::unique_lock lock(sessionsMutex_);
    id = "s" + std::to_string(nextSessionId_++);
    session->id = id;
    if (scene.id.empty()) scene.id = id;
    session->scene = std::move(scene);
    sessions_[id] = session;
  }
  json payload = body;
  payload["sessionId"] = id;
  log(id, "create_session", payload);
  return {{"sessionId", id}, {"revision", 0}};
}

json SessionStore::suggest(const std::string& sessionId, const json& body) {
  requireObject(body);
  auto session = find(sessionId);
  std::shared_lock lock(session->mutex);
  const Scene& scene = session->scene;

  ContextQuery query;
  try {
    if (auto ray = body.find("ray"); ray != body.end()) {
      if (!ray->is_object()) badRequest("ray must be an object");
      const auto origin = optionalVec3(*ray, "origin");
      const auto direction = optionalVec3(*ray, "direction");
      if (!origin || !direction) badRequest("ray needs origin and direction");
      if (direction->norm() < 1e-12) badRequest("ray direction must be non-zero");
      auto q = contextFromRay(scene, *models_, Ray{*origin, direction->normalized()});
      if (!q) unprocessable("ray does not hit the scene");
      query = std::move(*q);
    } else {
      const auto pos = optionalVec3(body, "pos");
      if (!pos) badRequest("suggest needs either a ray or pos + parentId");
      const std::string parentId = requireString(body, "parentId");
      const auto normal = optionalVec3(body, "surfaceNormal");
      if (scene.find(parentId) == nullptr) unprocessable("parent '" + parentId + "' is not in the scene");
      query = makeContextQuery(scene, *models_, parentId, *pos, normal);
    }
  } catch (const Error& e) {
    throw ServiceError(statusFor(e), e.what());
  }

  SuggestOptions options;
  if (auto limit = body.find("limit"); limit != body.end()) {
    if (!limit->is_number_integer() || limit->get<long>() < 0) badRequest("limit must be a non-negative integer");
    options.limit = limit->get<std::size_t>();
  }
  const auto suggestions = scenehint::suggest(*priors_, *models_, query, options);

  std::string queryId;
  if (auto qid = body.find("queryId"); qid != body.end() && qid->is_string()) {
    queryId = qid->get<std::string>();
  } else {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(body.dump())));
    queryId = "r" + std::to_string(session->revision) + "-" + buf;
  }

  json list = json::array();
  json ranked = json::array();
  for (const auto& s : suggestions) {
    list.push_back(toJson(s));
    ranked.push_back(s.category);
  }
  log(sessionId, "suggest", {{"queryId", queryId}, {"request", body}, {"rankedCategories", ranked}});
  return {{"queryId", queryId}, {"query", toJson(query)}, {"suggestions", list}, {"revision", session->revision}};
}

namespace {

void checkRevision(const Session& session, std::optional<long> expected) {
  if (expected && *expected != session.revision) {
    throw ServiceError(409, "revision conflict: expected " + std::to_string(*expected) + ", current " +
                                std::to_string(session.revision));
  }
}

std::string freshObjectId(Session& session) {
  for (;;) {
    std::string id = "o" + std::to_string(session.nextObjectId++);
    if (session.scene.find(id) == nullptr) return id;
  }
}

bool isInSubtree(const Scene& scene, const std::string& candidate, const std::string& root) {
  std::string current = candidate;
  std::set<std::string> seen;
  while (seen.insert(current).second) {
    if (current == root) return true;
    const ModelInstance* o = scene.find(current);
    if (o == nullptr || !o->parentId) return false;
    current = *o->parentId;
  }
  return false;
}

}  // namespace

json SessionStore::insertObject(const std::string& sessionId, const json& body, std::optional<long> expectedRevision) {
  requireObject(body);
  auto session = find(sessionId);
  std::unique_lock lock(session->mutex);
  checkRevision(*session, expectedRevision);
  Scene& scene = session->scene;

  const std::string modelId = requireString(body, "modelId");
  const ModelMetadata* meta = models_->find(modelId);
  if (meta == nullptr) unprocessable("unknown modelId '" + modelId + "'");
  const std::string parentId = requireString(body, "parentId");
  if (scene.find(parentId) == nullptr) unprocessable("parent '" + parentId + "' is not in the scene");
  auto t = body.find("transform");
  if (t == body.end()) badRequest("field 'transform' is required");
  Transform transform;
  try {
    transform = transformFromJson(*t);
  } catch (const Error& e) {
    badRequest(e.what());
  }

  std::optional<StoredPlacement> placement;
  const auto anchor = optionalVec3(body, "anchor");
  const auto normal = optionalVec3(body, "surfaceNormal");
  if (anchor && normal && body.contains("face")) {
    StoredPlacement p;
    p.anchor = *anchor;
    if (!isUnit(*normal)) badRequest("surfaceNormal must be unit length");
    p.surfaceNormal = *normal;
    try {
      p.face = parseFace(requireString(body, "face"));
    } catch (const Error& e) {
      badRequest(e.what());
    }
    p.alpha = optionalNumber(body, "alpha").value_or(0.0);
    placement = p;
  }

  const std::string objectId = freshObjectId(*session);
  ModelInstance inst;
  inst.id = objectId;
  inst.modelId = modelId;
  inst.transform = transform;
  inst.parentId = parentId;
  scene.objects.push_back(std::move(inst));
  scene.supportEdges.emplace_back(objectId, parentId);
  if (placement) session->placements[objectId] = *placement;
  const long revision = ++session->revision;

  json payload = body;
  payload["objectId"] = objectId;
  payload["category"] = meta->category;
  payload["revision"] = revision;
  log(sessionId, "insert", payload);
  return {{"objectId", objectId}, {"revision", revision}};
}

json SessionStore::updateObject(const std::string& sessionId, const std::string& objectId, const json& body,
                                std::optional<long> expectedRevision) {
  requireObject(body);
  auto session = find(sessionId);
  std::unique_lock lock(session->mutex);
  checkRevision(*session, expectedRevision);
  Scene& scene = session->scene;

  ModelInstance* obj = scene.find(objectId);
  if (obj == nullptr) throw ServiceError(404, "unknown object '" + objectId + "'");
  if (!obj->parentId) unprocessable("the room cannot be moved");
  const ModelMetadata& meta = models_->at(obj->modelId);
  const ModelInstance* currentParent = scene.find(*obj->parentId);
  if (currentParent == nullptr) unprocessable("object has no parent in the scene");

  const auto newAnchor = optionalVec3(body, "anchor");
  const auto newAlpha = optionalNumber(body, "alpha");
  if (!newAnchor && !newAlpha) badRequest("update needs 'anchor' and/or 'alpha'");

  StoredPlacement placement;
  if (auto it = session->placements.find(objectId); it != session->placements.end()) {
    placement = it->second;
  } else {
    const SupportContact contact = identifySupportSurface(*obj, *currentParent, *models_);
    placement.anchor = contact.contactPoint;
    placement.surfaceNormal = contact.surfaceNormal;
    placement.face = contact.childFace;
    placement.alpha = recoverAlpha(*obj, meta, placement, contact.parentSurface.normalClass);
  }

  std::string parentId = *obj->parentId;
  try {
    if (newAnchor) {
      if (body.contains("parentId")) parentId = requireString(body, "parentId");
      const ModelInstance* target = scene.find(parentId);
      if (target == nullptr) unprocessable("parent '" + parentId + "' is not in the scene");
      if (isInSubtree(scene, parentId, objectId)) unprocessable("an object cannot rest on itself or its children");

      const OrientedBox box = instanceBox(*target, models_->at(target->modelId));
      const auto requested = optionalVec3(body, "surfaceNormal");
      if (requested && !isUnit(*requested)) badRequest("surfaceNormal must be unit length");
      std::optional<Vec3> surfaceNormal;
      double best = kContactThreshold;
      for (AttachmentFace f : kAllFaces) {
        const Vec3 offered = target->isArchitecture ? Vec3(-box.faceNormal(f)) : box.faceNormal(f);
        const Vec3 wanted = requested ? *requested : (parentId == *obj->parentId ? placement.surfaceNormal : offered);
        if (offered.dot(wanted) < 1.0 - 1e-6) continue;
        const double d = box.distanceToFace(*newAnchor, f);
        if (d <= best) {
          best = d;
          surfaceNormal = offered;
        }
      }
      if (!surfaceNormal) unprocessable("anchor is not on a support surface of '" + parentId + "'");

      const SurfaceType oldType = featurizeSurface(placement.surfaceNormal, currentParent->isArchitecture);
      const SurfaceType newType = featurizeSurface(*surfaceNormal, target->isArchitecture);
      if (newType != oldType) {
        if (priors_->supportSurfaceProbability(newType, meta.category) <= 0.0) {
          unprocessable(meta.category + " is never supported by a " + newType.toString() + " surface");
        }
        placement.face = priors_->chooseAttachmentFace(meta.category, newType, meta.shapeClass());
      }
      placement.anchor = *newAnchor;
      placement.surfaceNormal = *surfaceNormal;
    }
    if (newAlpha) placement.alpha = *newAlpha;
  } catch (const Error& e) {
    throw ServiceError(statusFor(e), e.what());
  }

  obj->transform = composePlacement(placement.anchor, placement.surfaceNormal, placement.face, placement.alpha, meta);
  obj->parentId = parentId;
  for (auto& edge : scene.supportEdges) {
    if (edge.first == objectId) edge.second = parentId;
  }
  session->placements[objectId] = placement;
  const long revision = ++session->revision;

  json payload = body;
  payload["objectId"] = objectId;
  payload["revision"] = revision;
  log(sessionId, "update", payload);
  return {{"objectId", objectId}, {"revision", revision}, {"transform", toJson(obj->transform)}};
}

json SessionStore::deleteObject(const std::string& sessionId, const std::string& objectId,
                                std::optional<long> expectedRevision) {
  auto session = find(sessionId);
  std::unique_lock lock(session->mutex);
  checkRevision(*session, expectedRevision);
  Scene& scene = session->scene;

  const ModelInstance* obj = scene.find(objectId);
  if (obj == nullptr) throw ServiceError(404, "unknown object '" + objectId + "'");
  if (!obj->parentId) unprocessable("the room cannot be deleted");

  std::set<std::string> doomed = {objectId};
  for (bool grew = true; grew;) {
    grew = false;
    for (const auto& [child, parent] : scene.supportEdges) {
      if (doomed.count(parent) != 0 && doomed.insert(child).second) grew = true;
    }
  }
  std::erase_if(scene.objects, [&](const ModelInstance& o) { return doomed.count(o.id) != 0; });
  std::erase_if(scene.supportEdges, [&](const auto& e) { return doomed.count(e.first) != 0; });
  for (const auto& id : doomed) session->placements.erase(id);
  const long revision = ++session->revision;

  json removed(std::vector<std::string>(doomed.begin(), doomed.end()));
  log(sessionId, "delete", {{"objectId", objectId}, {"removed", removed}, {"revision", revision}});
  return {{"removed", removed}, {"revision", revision}};
}

json SessionStore::recordSelection(const std::string& sessionId, const json& body) {
  requireObject(body);
  auto session = find(sessionId);
  if (requireString(body, "category").empty()) badRequest("category must not be empty");
  log(sessionId, "select", body);
  return {{"ok", true}};
}

json SessionStore::searchModels(const std::string& text, std::size_t limit, const std::optional<std::string>& sessionId) {
  if (sessionId) find(*sessionId);
  json results = json::array();
  for (const auto& hit : keywordSearch(*models_, text, limit)) {
    const ModelMetadata& meta = models_->at(hit.modelId);
    results.push_back({{"modelId", hit.modelId},
                       {"score", hit.score},
                       {"category", meta.category},
                       {"name", meta.name},
                       {"thumbnail", "/thumbnails/" + hit.modelId + ".png"}});
  }
  if (sessionId) log(*sessionId, "search", {{"q", text}, {"resultCount", results.size()}});
  return {{"results", results}};
}

json SessionStore::sessionJson(const std::string& sessionId) const {
  auto session = find(sessionId);
  std::shared_lock lock(session->mutex);
  return {{"sessionId", session->id},
          {"sceneType", session->scene.sceneType},
          {"revision", session->revision},
          {"scene", toJson(session->scene)}};
}

json SessionStore::exportScene(const std::string& sessionId) const {
  auto session = find(sessionId);
  std::shared_lock lock(session->mutex);
  return toJson(session->scene);
}

long SessionStore::revision(const std::string& sessionId) const {
  auto session = find(sessionId);
  std::shared_lock lock(session->mutex);
  return session->revision;
}

// ---------------------------------------------------------------------------
// Replay

void replayLog(std::istream& in, SessionStore& store) {
  std::string line;
  std::size_t lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "log line " + std::to_string(lineNo);
    json event;
    try {
      event = json::parse(line);
    } catch (const json::exception& e) {
      badRequest(where + ": " + e.what());
    }
    if (!event.is_object() || !event.contains("op") || !event.contains("payload")) badRequest(where + ": not an event");
    const std::string op = event["op"].get<std::string>();
    const json& payload = event["payload"];
    const std::string sessionId = event.value("sessionId", "");

    auto expectEqual = [&](const json& got, const char* field) {
      if (got.at(field) != payload.at(field)) {
        throw ServiceError(409, where + ": replay produced " + field + " " + got.at(field).dump() + " instead of " +
                                    payload.at(field).dump());
      }
    };
    if (op == "create_session") {
      expectEqual(store.createSession(payload), "sessionId");
    } else if (op == "insert") {
      expectEqual(store.insertObject(sessionId, payload), "objectId");
    } else if (op == "update") {
      store.updateObject(sessionId, payload.at("objectId").get<std::string>(), payload);
    } else if (op == "delete") {
      store.deleteObject(sessionId, payload.at("objectId").get<std::string>());
    }
  }
}

}  // namespace scenehint
