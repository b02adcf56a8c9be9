#include "scenehint/error.hpp"
#include "scenehint/priors.hpp"
#include "scenehint/scene_io.hpp"
#include "scenehint/service.hpp"

#include "CLI11.hpp"
#include "httplib.h"

#include <fstream>
#include <iostream>

using namespace scenehint;

int main(int argc, char** argv) {
  CLI::App app{"scenehint-server: JSON API for interactive scene design"};
  std::string priorsPath, modelsPath, logPath, host = "127.0.0.1";
  int port = 8080;
  app.add_option("--priors", priorsPath)->required();
  app.add_option("--models", modelsPath)->required();
  app.add_option("--port", port);
  app.add_option("--host", host);
  app.add_option("--log", logPath, "interaction log (JSON lines)");
  CLI11_PARSE(app, argc, argv);

  std::shared_ptr<const PriorsDB> priors;
  std::shared_ptr<const ModelDb> models;
  try {
    priors = std::make_shared<const PriorsDB>(loadPriors(priorsPath));
    models = std::make_shared<const ModelDb>(modelDbFromJson(readJsonFile(modelsPath)));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Io ? 2 : 1;
  }

  std::ofstream logFile;
  std::unique_ptr<EventLog> log;
  if (!logPath.empty()) {
    logFile.open(logPath, std::ios::app);
    if (!logFile) {
      std::cerr << "error: cannot open log " << logPath << '\n';
      return 2;
    }
    log = std::make_unique<EventLog>(logFile);
  }

  SessionStore store(priors, models, log.get());
  httplib::Server server;
  registerRoutes(server, store);
  std::cerr << "listening on " << host << ":" << port << '\n';
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << '\n';
    return 2;
  }
  return 0;
}
