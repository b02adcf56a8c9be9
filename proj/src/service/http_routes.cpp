#include "scenehint/error.hpp"
#include "scenehint/service.hpp"

#include "httplib.h"

#include <charconv>

namespace scenehint {

using nlohmann::json;

const std::string& placeholderThumbnail() {
  static const std::string png = [] {
    const unsigned char bytes[] = {
        0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44, 0x52, 0x00,
        0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x08, 0x04, 0x00, 0x00, 0x00, 0xb5, 0x1c, 0x0c, 0x02, 0x00,
        0x00, 0x00, 0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0xda, 0x63, 0x64, 0x60, 0x00, 0x00, 0x00, 0x06, 0x00,
        0x02, 0x30, 0x81, 0xd0, 0x2f, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};
    return std::string(reinterpret_cast<const char*>(bytes), sizeof bytes);
  }();
  return png;
}

namespace {

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

json parseBody(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("malformed JSON body: ") + e.what());
  }
}

std::optional<long> parseRevision(const std::string& text) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ServiceError(400, "expected revision must be an integer");
  }
  return value;
}

/// X-Expected-Revision header, else an "expectedRevision" body field.
std::optional<long> expectedRevision(const httplib::Request& req, const json& body) {
  if (req.has_header("X-Expected-Revision")) return parseRevision(req.get_header_value("X-Expected-Revision"));
  if (body.is_object()) {
    auto it = body.find("expectedRevision");
    if (it != body.end() && !it->is_null()) {
      if (!it->is_number_integer()) throw ServiceError(400, "expectedRevision must be an integer");
      return it->get<long>();
    }
  }
  return std::nullopt;
}

template <typename Fn>
httplib::Server::Handler handle(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const ServiceError& e) {
      reply(res, e.status(), {{"error", e.what()}});
    } catch (const Error& e) {
      reply(res, e.code() == ErrorCode::NotFound ? 404 : 400, {{"error", e.what()}});
    } catch (const json::exception& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  };
}

}  // namespace

void registerRoutes(httplib::Server& server, SessionStore& store) {
  server.Post("/session", handle([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, store.createSession(parseBody(req)));
              }));

  server.Get("/session/:id", handle([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, store.sessionJson(req.path_params.at("id")));
             }));

  server.Post("/session/:id/suggest", handle([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, store.suggest(req.path_params.at("id"), parseBody(req)));
              }));

  server.Post("/session/:id/select", handle([&](const httplib::Request& req, httplib::Response& res) {
                reply(res, 200, store.recordSelection(req.path_params.at("id"), parseBody(req)));
              }));

  server.Post("/session/:id/objects", handle([&](const httplib::Request& req, httplib::Response& res) {
                const json body = parseBody(req);
                reply(res, 200, store.insertObject(req.path_params.at("id"), body, expectedRevision(req, body)));
              }));

  server.Patch("/session/:id/objects/:oid", handle([&](const httplib::Request& req, httplib::Response& res) {
                 const json body = parseBody(req);
                 reply(res, 200,
                       store.updateObject(req.path_params.at("id"), req.path_params.at("oid"), body,
                                          expectedRevision(req, body)));
               }));

  server.Delete("/session/:id/objects/:oid", handle([&](const httplib::Request& req, httplib::Response& res) {
                  const json body = parseBody(req);
                  reply(res, 200,
                        store.deleteObject(req.path_params.at("id"), req.path_params.at("oid"),
                                           expectedRevision(req, body)));
                }));

  server.Get("/models", handle([&](const httplib::Request& req, httplib::Response& res) {
               std::size_t limit = 0;
               if (req.has_param("limit")) {
                 const auto parsed = parseRevision(req.get_param_value("limit"));
                 if (*parsed < 0) throw ServiceError(400, "limit must be non-negative");
                 limit = static_cast<std::size_t>(*parsed);
               }
               std::optional<std::string> session;
               if (req.has_param("session")) session = req.get_param_value("session");
               reply(res, 200, store.searchModels(req.get_param_value("q"), limit, session));
             }));

  server.Get("/scenes/:id/export", handle([&](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, store.exportScene(req.path_params.at("id")));
             }));

  server.Get("/thumbnails/:file", handle([&](const httplib::Request& req, httplib::Response& res) {
               const std::string& file = req.path_params.at("file");
               const std::string suffix = ".png";
               if (file.size() <= suffix.size() || file.compare(file.size() - suffix.size(), suffix.size(), suffix) != 0) {
                 throw ServiceError(404, "thumbnails are PNG files");
               }
               const std::string modelId = file.substr(0, file.size() - suffix.size());
               if (store.models().find(modelId) == nullptr) throw ServiceError(404, "unknown model '" + modelId + "'");
               res.status = 200;
               res.set_content(placeholderThumbnail(), "image/png");
             }));
}

}  // namespace scenehint
