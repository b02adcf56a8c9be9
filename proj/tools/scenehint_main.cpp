// scenehint: learn priors, inspect them, run headless queries, generate
// synthetic corpora and score interaction logs.

#include "scenehint/corpus.hpp"
#include "scenehint/error.hpp"
#include "scenehint/eval.hpp"
#include "scenehint/priors.hpp"
#include "scenehint/scene_io.hpp"
#include "scenehint/suggest.hpp"
#include "scenehint/synthetic.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/core.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace scenehint;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

int exitCodeFor(const Error& e) { return e.code() == ErrorCode::Io ? kExitIo : kExitValidation; }

Vec3 parseTriple(const std::string& text, const char* what) {
  std::stringstream ss(text);
  std::string part;
  std::vector<double> values;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidInput, std::string(what) + " must be three comma-separated numbers");
    }
  }
  if (values.size() != 3) throw Error(ErrorCode::InvalidInput, std::string(what) + " must be three comma-separated numbers");
  return {values[0], values[1], values[2]};
}

void printJson(const json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

int runLearn(const std::string& corpusDir, const std::string& out, bool asJson) {
  const Corpus corpus = loadCorpus(corpusDir);
  const ObservationSet obs = extractObservations(corpus.scenes, corpus.models, corpus.taxonomy);
  const PriorsDB db = learnPriors(obs, corpus.taxonomy, corpus.models);
  savePriors(db, out);

  std::size_t lowConfidence = 0;
  for (const auto& s : obs.supports) lowConfidence += s.lowConfidence ? 1 : 0;
  const json summary = {{"scenes", corpus.scenes.size()},
                        {"observations",
                         {{"support", obs.supports.size()},
                          {"count", obs.counts.size()},
                          {"relative", obs.relatives.size()},
                          {"lowConfidenceSupport", lowConfidence}}},
                        {"entries",
                         {{"count", db.countHists.size()},
                          {"support", db.supportCats.size()},
                          {"face", db.faceCats.size()},
                          {"relpos", db.relPos.size()},
                          {"relorient", db.relOrient.size()}}},
                        {"out", out}};
  if (asJson) {
    printJson(summary);
  } else {
    fmt::print("learned priors from {} scenes -> {}\n", corpus.scenes.size(), out);
    for (const auto& [family, n] : summary["entries"].items()) fmt::print("  {:<10} {:>6} entries\n", family, n.get<std::size_t>());
    if (lowConfidence > 0) fmt::print("  {} support contacts fell back to a bottom-on-up guess\n", lowConfidence);
  }
  return 0;
}

using ojson = nlohmann::ordered_json;

ojson dumpFamily(const PriorsDB& db, const std::string& key, const std::string& family) {
  ojson rows = ojson::array();
  if (family == "support") {
    if (auto it = db.supportCats.find(key); it != db.supportCats.end()) {
      for (int i = 0; i < SurfaceType::kCount; ++i) {
        const SurfaceType t = SurfaceType::fromIndex(i);
        if (it->second.counts[static_cast<std::size_t>(i)] == 0) continue;
        rows.push_back({{"surface", t.toString()}, {"probability", it->second.probability(t)}, {"n", it->second.nObs}});
      }
    }
  } else if (family == "face") {
    for (const auto& [k, cat] : db.faceCats) {
      if (k.category != key) continue;
      for (AttachmentFace f : kAllFaces) {
        if (cat.counts[static_cast<std::size_t>(faceIndex(f))] == 0) continue;
        rows.push_back({{"surface", k.surface.toString()}, {"face", std::string(toString(f))}, {"probability", cat.probability(f)}, {"n", cat.nObs}});
      }
    }
  } else if (family == "count") {
    for (const auto& [k, h] : db.countHists) {
      if (k.child != key) continue;
      for (const auto& [count, p] : h.probs()) {
        rows.push_back({{"parent", k.parent}, {"sceneType", k.sceneType}, {"count", count}, {"probability", p}, {"n", h.nObs}});
      }
    }
  } else if (family == "relpos") {
    for (const auto& [k, kde] : db.relPos) {
      if (k.objCategory != key) continue;
      for (const Vec2& s : kde.samples) {
        rows.push_back({{"ref", k.refCategory},
                        {"sceneType", k.sceneType},
                        {"relationship", std::string(toString(k.relationship))},
                        {"surface", k.surface.toString()},
                        {"radial", kde.radial},
                        {"x", s.x()},
                        {"y", kde.radial ? 0.0 : s.y()}});
      }
    }
  } else if (family == "relorient") {
    for (const auto& [k, h] : db.relOrient) {
      if (k.objCategory != key) continue;
      for (int b = 0; b < kOrientationBins; ++b) {
        if (h.counts[static_cast<std::size_t>(b)] == 0) continue;
        rows.push_back({{"ref", k.refCategory},
                        {"sceneType", k.sceneType},
                        {"relationship", std::string(toString(k.relationship))},
                        {"surface", k.surface.toString()},
                        {"binDeg", b * 10},
                        {"mass", h.mass(b, db.settings.smoothingEpsilon)},
                        {"n", h.nObs}});
      }
    }
  }
  return rows;
}

std::string cell(const ojson& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return fmt::format("{:.6g}", v.get<double>());
  return v.dump();
}

int runDump(const std::string& priorsPath, const std::string& key, const std::string& family, bool asJson) {
  const PriorsDB db = loadPriors(priorsPath);
  const std::vector<std::string> families =
      family.empty() ? std::vector<std::string>{"support", "face", "count", "relpos", "relorient"}
                     : std::vector<std::string>{family};
  ojson all = ojson::object();
  for (const auto& f : families) all[f] = dumpFamily(db, key, f);
  if (asJson) {
    std::cout << ojson({{"key", key}, {"families", all}}).dump(2) << '\n';
    return 0;
  }
  for (const auto& f : families) {
    const ojson& rows = all[f];
    if (f == "relpos") {
      // CSV so the samples can be plotted elsewhere.
      fmt::print("# relpos samples for {}\nref,sceneType,relationship,surface,radial,x,y\n", key);
      for (const auto& r : rows) {
        fmt::print("{},{},{},{},{},{},{}\n", cell(r["ref"]), cell(r["sceneType"]), cell(r["relationship"]),
                   cell(r["surface"]), cell(r["radial"]), cell(r["x"]), cell(r["y"]));
      }
      continue;
    }
    fmt::print("# {} prior for {} ({} rows)\n", f, key, rows.size());
    if (rows.empty()) continue;
    std::vector<std::string> columns;
    for (const auto& [name, v] : rows.front().items()) columns.push_back(name);
    for (const auto& c : columns) fmt::print("{:<16}", c);
    fmt::print("\n");
    for (const auto& r : rows) {
      for (const auto& c : columns) fmt::print("{:<16}", cell(r[c]));
      fmt::print("\n");
    }
  }
  return 0;
}

int runQuery(const std::string& priorsPath, const std::string& modelsPath, const std::string& scenePath,
             const std::string& pos, const std::string& parent, const std::string& normal, std::size_t limit,
             bool asJson) {
  const PriorsDB db = loadPriors(priorsPath);
  const ModelDb models = modelDbFromJson(readJsonFile(modelsPath));
  const Scene scene = sceneFromJson(readJsonFile(scenePath));
  validateScene(scene, models, scenePath);

  std::optional<Vec3> n;
  if (!normal.empty()) n = parseTriple(normal, "--normal");
  const ContextQuery query = makeContextQuery(scene, models, parent, parseTriple(pos, "--pos"), n);
  SuggestOptions options;
  options.limit = limit;
  const auto suggestions = suggest(db, models, query, options);

  if (asJson) {
    json list = json::array();
    for (const auto& s : suggestions) list.push_back(toJson(s));
    printJson({{"query", toJson(query)}, {"suggestions", list}});
    return 0;
  }
  fmt::print("query on {} ({}), surface {}\n", query.parentId, query.parentCategory, query.surfaceType.toString());
  fmt::print("{:>4}  {:<20} {:>12} {:>8} {:>9}  {}\n", "rank", "category", "score", "face", "alpha°", "model");
  int rank = 1;
  for (const auto& s : suggestions) {
    fmt::print("{:>4}  {:<20} {:>12.6g} {:>8} {:>9.2f}  {}\n", rank++, s.category, s.score, toString(s.placement.face),
               s.alpha * 180.0 / kPi, s.representativeModelId);
  }
  return 0;
}

int runEval(const std::string& logPath, bool asJson) {
  std::ifstream in(logPath);
  if (!in) throw Error(ErrorCode::Io, logPath + ": cannot open log");
  const LogSelections selections = selectionsFromLog(in);
  for (const auto& w : selections.warnings) std::cerr << "warning: " << w << '\n';
  const json report = evalReportJson(selections);
  if (asJson) {
    printJson(report);
    return 0;
  }
  auto printMode = [](const char* title, const json& m) {
    fmt::print("{}\n  MRR {:.6f} ({}) over {} selections", title, m["mrr"].get<double>(),
               m["mrrExact"].get<std::string>(), m["selections"].get<std::size_t>());
    if (m["excludedTextSearch"].get<std::size_t>() > 0) {
      fmt::print(", {} text-search selections not in the list", m["excludedTextSearch"].get<std::size_t>());
    }
    const json& d = m["rankDistribution"];
    fmt::print("\n  ranks 1: {}  2: {}  3: {}  4+: {}\n", d["1"].get<std::size_t>(), d["2"].get<std::size_t>(),
               d["3"].get<std::size_t>(), d["4+"].get<std::size_t>());
  };
  printMode("including text-search selections", report["includingTextSearch"]);
  printMode("suggestion selections only", report["suggestionsOnly"]);
  fmt::print("text queries: {}\nskipped malformed lines: {}\n", selections.textQueryCount, selections.skippedLines);
  fmt::print("reference study MRR (human participants, not reproducible here):");
  for (const auto& r : kReferenceMrr) fmt::print(" {}={:.3f}", r.condition, r.mrr);
  fmt::print("\n");
  return 0;
}

int runGen(const std::string& specPath, int n, std::uint64_t seed, const std::string& outDir, bool asJson) {
  const GeneratorSpec spec = GeneratorSpec::fromJson(readJsonFile(specPath));
  if (n <= 0) throw Error(ErrorCode::InvalidInput, "--n must be positive");
  const GeneratedCorpus generated = generateSyntheticCorpus(spec, n, seed);
  writeCorpus(outDir, generated.corpus);
  writeJsonFile(std::filesystem::path(outDir) / "generator.json",
                {{"spec", spec.toJson()}, {"seed", seed}, {"sceneCount", n}, {"truth", generated.truth.toJson()}});
  if (asJson) {
    printJson({{"scenes", generated.corpus.scenes.size()}, {"out", outDir}});
  } else {
    fmt::print("wrote {} scenes to {}\n", generated.corpus.scenes.size(), outDir);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenehint: contextual placement priors and suggestions"};
  app.require_subcommand(1);
  bool asJson = false;
  app.add_flag("--json", asJson, "machine-readable output");

  std::string corpusDir, out;
  auto* learn = app.add_subcommand("learn", "learn priors from a scene corpus");
  learn->add_option("--corpus", corpusDir, "corpus directory")->required();
  learn->add_option("--out", out, "priors file to write")->required();
  learn->add_flag("--json", asJson);

  std::string priorsPath, key, family;
  auto* dump = app.add_subcommand("dump", "print learned priors for one category");
  dump->add_option("--priors", priorsPath)->required();
  dump->add_option("--key", key, "object category")->required();
  dump->add_option("--family", family)->check(CLI::IsMember({"support", "face", "count", "relpos", "relorient"}));
  dump->add_flag("--json", asJson);

  std::string modelsPath, scenePath, pos, parent, normal;
  std::size_t limit = 0;
  auto* query = app.add_subcommand("query", "rank suggestions for a point in a scene");
  query->add_option("--priors", priorsPath)->required();
  query->add_option("--models", modelsPath)->required();
  query->add_option("--scene", scenePath)->required();
  query->add_option("--pos", pos, "x,y,z")->required();
  query->add_option("--parent", parent, "support parent object id")->required();
  query->add_option("--normal", normal, "nx,ny,nz (default: nearest parent surface)");
  query->add_option("--limit", limit, "maximum suggestions (0 = all)");
  query->add_flag("--json", asJson);

  std::string logPath;
  auto* eval = app.add_subcommand("eval", "mean reciprocal rank of an interaction log");
  eval->add_option("--log", logPath)->required();
  eval->add_flag("--json", asJson);

  std::string specPath;
  int n = 0;
  std::uint64_t seed = 0;
  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("--spec", specPath)->required();
  gen->add_option("--n", n)->required();
  gen->add_option("--seed", seed)->required();
  gen->add_option("--out", out)->required();
  gen->add_flag("--json", asJson);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*learn) return runLearn(corpusDir, out, asJson);
    if (*dump) return runDump(priorsPath, key, family, asJson);
    if (*query) return runQuery(priorsPath, modelsPath, scenePath, pos, parent, normal, limit, asJson);
    if (*eval) return runEval(logPath, asJson);
    if (*gen) return runGen(specPath, n, seed, out, asJson);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exitCodeFor(e);
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
