#pragma once

#include "scenehint/model.hpp"
#include "scenehint/priors.hpp"
#include "scenehint/scene.hpp"

#include "json.hpp"

#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <stdexcept>
#include <string>

namespace httplib {
class Server;
}

namespace scenehint {

/// Request failure carrying the HTTP status the facade should answer with.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

/// Append-only JSONL interaction log: {"ts", "sessionId", "op", "payload"}.
class EventLog {
 public:
  using Clock = std::function<std::string()>;

  /// `out` must outlive the log. The default clock is UTC ISO-8601 with milliseconds.
  explicit EventLog(std::ostream& out, Clock clock = {});

  void write(const std::string& sessionId, const std::string& op, const nlohmann::json& payload);

 private:
  std::mutex mutex_;
  std::ostream& out_;
  Clock clock_;
};

/// Spin and surface an object was placed with, kept so rotations and moves
/// can be recomposed exactly.
struct StoredPlacement {
  Vec3 anchor = Vec3::Zero();
  Vec3 surfaceNormal = Vec3::UnitZ();
  AttachmentFace face = AttachmentFace::Bottom;
  double alpha = 0.0;
};

struct Session {
  std::string id;
  Scene scene;
  long revision = 0;
  long nextObjectId = 1;
  std::map<std::string, StoredPlacement> placements;
  mutable std::shared_mutex mutex;
};

/// All session state behind the HTTP API. Request and response bodies are
/// JSON so the same calls serve HTTP, the log replayer and tests. Mutations
/// on one session are serialized; suggestions and reads share the lock.
/// Errors are thrown as ServiceError.
class SessionStore {
 public:
  SessionStore(std::shared_ptr<const PriorsDB> priors, std::shared_ptr<const ModelDb> models,
               EventLog* log = nullptr);

  /// {sceneType, scene?, roomModelId?} -> {sessionId, revision}
  nlohmann::json createSession(const nlohmann::json& body);

  /// {ray: {origin, direction}} or {pos, parentId, surfaceNormal?}, limit?,
  /// queryId? -> {queryId, query, suggestions, revision}. Never changes the
  /// scene. Without a client queryId one is derived from the revision and
  /// the request, so identical requests get identical responses.
  nlohmann::json suggest(const std::string& sessionId, const nlohmann::json& body);

  /// {modelId, parentId, transform, face?, anchor?, surfaceNormal?, alpha?,
  ///  queryId?, source?} -> {objectId, revision}
  nlohmann::json insertObject(const std::string& sessionId, const nlohmann::json& body,
                              std::optional<long> expectedRevision = std::nullopt);

  /// Move ({anchor, parentId?, surfaceNormal?}) and/or rotate ({alpha}).
  nlohmann::json updateObject(const std::string& sessionId, const std::string& objectId, const nlohmann::json& body,
                              std::optional<long> expectedRevision = std::nullopt);

  /// Removes the object and everything it supports.
  nlohmann::json deleteObject(const std::string& sessionId, const std::string& objectId,
                              std::optional<long> expectedRevision = std::nullopt);

  /// Records which suggestion (or search result) the user settled on:
  /// {queryId?, category, usedTextSearch?}.
  nlohmann::json recordSelection(const std::string& sessionId, const nlohmann::json& body);

  /// {results: [{modelId, score, category, name, thumbnail}]}; logs a search
  /// event when a session is given.
  nlohmann::json searchModels(const std::string& text, std::size_t limit,
                              const std::optional<std::string>& sessionId = std::nullopt);

  nlohmann::json sessionJson(const std::string& sessionId) const;
  nlohmann::json exportScene(const std::string& sessionId) const;
  long revision(const std::string& sessionId) const;

  const ModelDb& models() const { return *models_; }

 private:
  std::shared_ptr<Session> find(const std::string& sessionId) const;
  void log(const std::string& sessionId, const std::string& op, const nlohmann::json& payload);

  std::shared_ptr<const PriorsDB> priors_;
  std::shared_ptr<const ModelDb> models_;
  EventLog* log_;
  mutable std::shared_mutex sessionsMutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  long nextSessionId_ = 1;
};

/// Re-applies every accepted create/insert/update/delete in `log` to `store`
/// in order. Throws ServiceError if the log does not replay to the same ids.
void replayLog(std::istream& log, SessionStore& store);

/// Mounts the JSON API on `server`.
void registerRoutes(httplib::Server& server, SessionStore& store);

/// A valid 1x1 PNG used for every model thumbnail.
const std::string& placeholderThumbnail();

}  // namespace scenehint
