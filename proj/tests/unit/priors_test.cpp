#include "test_support.hpp"

#include "scenehint/error.hpp"
#include "scenehint/priors.hpp"

#include "unit.hpp"

#include <fstream>
#include <random>

using namespace scenehint;
using namespace scenehint::testing;

namespace {

const SurfaceType kUpExt{NormalClass::Up, Interiority::Exterior};
const SurfaceType kUpInt{NormalClass::Up, Interiority::Interior};
const SurfaceType kWall{NormalClass::Horizontal, Interiority::Interior};

ModelDb priorModels() {
  return ModelDb({boxModel("room_m", "room", Vec3(6, 5, 3)), boxModel("desk_m", "desk", Vec3(1.4, 0.7, 0.75)),
                  boxModel("lamp_m", "lamp", Vec3(0.2, 0.2, 0.5)), boxModel("desk_lamp_m", "desk_lamp", Vec3(0.15, 0.2, 0.4)),
                  boxModel("poster_m", "poster", Vec3(0.6, 0.01, 0.8)), boxModel("pen_m", "pen", Vec3(0.01, 0.14, 0.01)),
                  boxModel("box_m", "paper_box", Vec3(0.3, 0.4, 0.25)), boxModel("chair_m", "chair", Vec3(0.5, 0.5, 0.9))});
}

struct Builder {
  ObservationSet obs;
  int next = 0;

  void support(const std::string& child, const std::string& parent, SurfaceType t, AttachmentFace f,
               const std::string& sceneType = "office") {
    obs.supports.push_back({"s" + std::to_string(next), "o" + std::to_string(next), child, parent, sceneType, t, f, false});
    ++next;
  }
  void count(const std::string& child, const std::string& parent, int n, const std::string& sceneType = "office") {
    obs.counts.push_back({"s" + std::to_string(next), "p" + std::to_string(next), child, parent, sceneType, n});
    ++next;
  }
  void rel(const std::string& obj, const std::string& ref, std::optional<Vec2> delta, std::optional<double> radial,
           double theta, const std::string& sceneType = "office", SurfaceType t = kUpInt,
           Relationship r = Relationship::Sibling) {
    RelObservation o;
    o.sceneId = "s" + std::to_string(next);
    o.objId = "o" + std::to_string(next);
    o.refId = "r" + std::to_string(next);
    o.objCategory = obj;
    o.refCategory = ref;
    o.sceneType = sceneType;
    o.relationship = r;
    o.surface = t;
    o.delta = delta;
    o.radial = radial;
    o.theta = wrapAngle(theta);
    obs.relatives.push_back(o);
    ++next;
  }
  PriorsDB learn(const CategoryTaxonomy& tax = {}) const { return learnPriors(obs, tax, priorModels()); }
};

RelKey key(const std::string& obj, const std::string& ref, const std::string& sceneType = "office") {
  return {obj, ref, sceneType, Relationship::Sibling, kUpInt};
}

}  // namespace

TEST_CASE("count histograms") {
  SUBCASE("one desk per office") {
    Builder b;
    for (int i = 0; i < 10; ++i) b.count("desk", "room", 1);
    const PriorsDB db = b.learn();
    CHECK(db.countHists.at({"desk", "room", "office"}).probs() == std::map<int, double>{{1, 1.0}});
    CHECK(db.occurrenceProbability("desk", "room", "office", 0) == 1.0);
    CHECK(db.occurrenceProbability("desk", "room", "office", 1) == 0.0);
  }
  SUBCASE("tail sum") {
    Builder b;
    for (int i = 0; i < 4; ++i) b.count("chair", "room", 1);
    for (int i = 0; i < 6; ++i) b.count("chair", "room", 2);
    const PriorsDB db = b.learn();
    CHECK(db.occurrenceProbability("chair", "room", "office", 1) == 0.6);
    CHECK(db.occurrenceProbability("chair", "room", "office", 0) == 1.0);
    CHECK(db.occurrenceProbability("chair", "room", "office", -3) == 1.0);
  }
  SUBCASE("never seen anywhere") {
    Builder b;
    b.count("chair", "room", 1);
    const PriorsDB db = b.learn();
    LookupTrace trace;
    CHECK(db.occurrenceProbability("piano", "room", "office", 0, &trace) == 1e-4);
    CHECK(trace.resolvedLevel == -1);
    CHECK(trace.levels.back() == -1);
  }
}

TEST_CASE("occurrence probability never grows with k") {
  const PriorsDB& db = *officeWorld().priors;
  for (const auto& [k, h] : db.countHists) {
    double previous = 1.0;
    for (int n = 0; n < 6; ++n) {
      const double p = db.occurrenceProbability(k.child, k.parent, k.sceneType, n);
      CHECK(p <= previous);
      previous = p;
    }
  }
}

TEST_CASE("backoff ladder") {
  CategoryTaxonomy tax;
  tax.setParent("desk_lamp", "lamp");

  SUBCASE("enough observations at the specific key: nothing else is consulted") {
    Builder b;
    for (int i = 0; i < 5; ++i) b.count("desk_lamp", "desk", 1);
    for (int i = 0; i < 20; ++i) b.count("lamp", "desk", 0, "bedroom");
    const PriorsDB db = b.learn(tax);
    LookupTrace trace;
    CHECK(db.occurrenceProbability("desk_lamp", "desk", "office", 0, &trace) == 1.0);
    CHECK(trace.levels == std::vector<int>{0});
    CHECK(trace.resolvedLevel == 0);
  }
  SUBCASE("sparse specific key backs off to the taxonomy parent") {
    Builder b;
    for (int i = 0; i < 2; ++i) b.count("desk_lamp", "desk", 1);
    for (int i = 0; i < 6; ++i) b.count("lamp", "desk", 0);
    const PriorsDB db = b.learn(tax);
    LookupTrace trace;
    // The lamp entry pools its desk_lamp descendants: 2 of 8 desks have one.
    CHECK(db.occurrenceProbability("desk_lamp", "desk", "office", 0, &trace) == 0.25);
    CHECK(trace.resolvedLevel == 1);
    CHECK(trace.levels == std::vector<int>{0, 1});
  }
  SUBCASE("other scene types are pooled under the wildcard") {
    Builder b;
    for (int i = 0; i < 2; ++i) b.count("chair", "desk", 1);
    for (int i = 0; i < 8; ++i) b.count("chair", "desk", 2, "bedroom");
    const PriorsDB db = b.learn(tax);
    LookupTrace trace;
    CHECK(db.occurrenceProbability("chair", "desk", "office", 1, &trace) == 0.8);
    CHECK(trace.resolvedLevel == 2);
  }
  SUBCASE("no level reaches the threshold: first one with data") {
    Builder b;
    for (int i = 0; i < 2; ++i) b.count("desk_lamp", "desk", 1);
    const PriorsDB db = b.learn(tax);
    LookupTrace trace;
    CHECK(db.occurrenceProbability("desk_lamp", "desk", "office", 0, &trace) == 1.0);
    CHECK(trace.levels == std::vector<int>{0, 1, 2, 3});
    CHECK(trace.resolvedLevel == 0);
  }
}

TEST_CASE("support surface probabilities") {
  SUBCASE("7 of 10 lamps on desks") {
    Builder b;
    for (int i = 0; i < 7; ++i) b.support("lamp", "desk", kUpExt, AttachmentFace::Bottom);
    for (int i = 0; i < 3; ++i) b.support("lamp", "room", kWall, AttachmentFace::Back);
    const PriorsDB db = b.learn();
    CHECK(db.supportSurfaceProbability(kUpExt, "lamp") == 0.7);
    CHECK(db.supportSurfaceProbability(kWall, "lamp") == 0.3);
    CHECK(db.supportSurfaceProbability(kUpInt, "lamp") == 0.0);
  }
  SUBCASE("posters only on walls") {
    Builder b;
    for (int i = 0; i < 12; ++i) b.support("poster", "room", kWall, AttachmentFace::Back);
    const PriorsDB db = b.learn();
    for (int i = 0; i < SurfaceType::kCount; ++i) {
      const SurfaceType t = SurfaceType::fromIndex(i);
      CHECK(db.supportSurfaceProbability(t, "poster") == (t == kWall ? 1.0 : 0.0));
    }
    CHECK(db.attachmentFaceProbability(AttachmentFace::Back, "poster", kWall) == 1.0);
    CHECK(db.chooseAttachmentFace("poster", kWall) == AttachmentFace::Back);
  }
  SUBCASE("6 to 4") {
    Builder b;
    for (int i = 0; i < 6; ++i) b.support("chair", "room", kUpInt, AttachmentFace::Bottom);
    for (int i = 0; i < 4; ++i) b.support("chair", "desk", kUpExt, AttachmentFace::Bottom);
    const PriorsDB db = b.learn();
    CHECK(db.supportSurfaceProbability(kUpInt, "chair") == 0.6);
    CHECK(db.supportSurfaceProbability(kUpExt, "chair") == 0.4);
  }
  SUBCASE("unseen category uses the geometric guess") {
    Builder b;
    b.support("chair", "room", kUpInt, AttachmentFace::Bottom);
    const PriorsDB db = b.learn();
    CHECK(db.supportSurfaceProbability(kUpExt, "unicorn") == 0.5);
    CHECK(db.supportSurfaceProbability(kWall, "unicorn") == 0.0);
  }
}

TEST_CASE("attachment faces") {
  SUBCASE("8 bottom, 2 back") {
    Builder b;
    for (int i = 0; i < 8; ++i) b.support("monitor", "desk", kUpExt, AttachmentFace::Bottom);
    for (int i = 0; i < 2; ++i) b.support("monitor", "desk", kUpExt, AttachmentFace::Back);
    const PriorsDB db = b.learn();
    CHECK(db.attachmentFaceProbability(AttachmentFace::Bottom, "monitor", kUpExt) == 0.8);
    CHECK(db.attachmentFaceProbability(AttachmentFace::Back, "monitor", kUpExt) == 0.2);
    CHECK(db.chooseAttachmentFace("monitor", kUpExt) == AttachmentFace::Bottom);
  }
  SUBCASE("rugs lie on their bottom") {
    Builder b;
    for (int i = 0; i < 9; ++i) b.support("rug", "room", kUpInt, AttachmentFace::Bottom);
    CHECK(b.learn().attachmentFaceProbability(AttachmentFace::Bottom, "rug", kUpInt) == 1.0);
  }
  SUBCASE("uniform faces fall to the tie-break order") {
    Builder b;
    for (AttachmentFace f : kAllFaces) b.support("cube", "desk", kUpExt, f);
    CHECK(b.learn().chooseAttachmentFace("cube", kUpExt) == AttachmentFace::Bottom);
  }
  SUBCASE("learned monitor on the synthetic office corpus") {
    CHECK(officeWorld().priors->chooseAttachmentFace("monitor", kUpExt) == AttachmentFace::Bottom);
  }
}

TEST_CASE("geometry fallback") {
  const ModelDb models = priorModels();
  CHECK(geometryFallback(models.at("box_m")).face == AttachmentFace::Bottom);
  CHECK(geometryFallback(models.at("box_m")).supportSurface == kUpExt);
  CHECK(geometryFallbackFace(ShapeClass::Flat, kWall) == AttachmentFace::Back);
  CHECK(geometryFallbackFace(ShapeClass::Flat, kUpExt) == AttachmentFace::Bottom);
  const AttachmentFace pen = geometryFallback(models.at("pen_m")).face;
  CHECK(faceAxis(pen) == 0);  // a side face

  Builder b;
  b.support("chair", "room", kUpInt, AttachmentFace::Bottom);
  const PriorsDB db = b.learn();
  CHECK(db.chooseAttachmentFace("poster", kWall) == AttachmentFace::Back);
  CHECK(db.chooseAttachmentFace("pen", kUpExt) == AttachmentFace::Left);
  CHECK(db.chooseAttachmentFace("unicorn", kWall, ShapeClass::Flat) == AttachmentFace::Back);
}

TEST_CASE("relative position density") {
  SUBCASE("single sample is the peak") {
    Builder b;
    b.rel("chair", "desk", Vec2(1, 0), std::nullopt, 0.0);
    const PriorsDB db = b.learn();
    const RelPosKde& kde = db.relPos.at(key("chair", "desk"));
    const double peak = kde.density2d(Vec2(1, 0));
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int i = 0; i < 500; ++i) CHECK(kde.density2d(Vec2(u(rng), u(rng))) <= peak);
  }
  SUBCASE("symmetric pair") {
    Builder b;
    b.rel("chair", "desk", Vec2(1, 0), std::nullopt, 0.0);
    b.rel("chair", "desk", Vec2(-1, 0), std::nullopt, 0.0);
    const PriorsDB db = b.learn();
    const RelPosKde& kde = db.relPos.at(key("chair", "desk"));
    CHECK(std::abs(kde.density2d(Vec2(1, 0)) - kde.density2d(Vec2(-1, 0))) <= 1e-9);
  }
  SUBCASE("integrates to one") {
    Builder b;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g(0.0, 0.4);
    for (int i = 0; i < 40; ++i) b.rel("chair", "desk", Vec2(g(rng), 1 + g(rng)), std::nullopt, 0.0);
    for (int i = 0; i < 40; ++i) b.rel("chair", "plant", std::nullopt, std::abs(1 + g(rng)), 0.0);
    const PriorsDB db = b.learn();
    const RelPosKde& kde = db.relPos.at(key("chair", "desk"));
    const Vec2 h = kde.bandwidth;
    Vec2 lo = kde.samples.front(), hi = lo;
    for (const Vec2& s : kde.samples) lo = lo.cwiseMin(s), hi = hi.cwiseMax(s);
    double sum = 0.0;
    const double dx = h.x() / 4, dy = h.y() / 4;
    for (double x = lo.x() - 5 * h.x(); x <= hi.x() + 5 * h.x(); x += dx) {
      for (double y = lo.y() - 5 * h.y(); y <= hi.y() + 5 * h.y(); y += dy) sum += kde.density2d(Vec2(x, y)) * dx * dy;
    }
    CHECK(std::abs(sum - 1.0) <= 0.02);

    const RelPosKde& radial = db.relPos.at(key("chair", "plant"));
    CHECK(radial.radial);
    double line = 0.0;
    const double dr = radial.bandwidth.x() / 8;
    for (double r = -2; r <= 5; r += dr) line += radial.density1d(r) * dr;
    CHECK(std::abs(line - 1.0) <= 0.02);
  }
  SUBCASE("nonnegative and independent of sample order") {
    const PriorsDB& db = *officeWorld().priors;
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(-3, 3);
    int checked = 0;
    for (const auto& [k, kde] : db.relPos) {
      if (checked++ > 20) break;
      RelPosKde shuffled = kde;
      std::shuffle(shuffled.samples.begin(), shuffled.samples.end(), rng);
      for (int i = 0; i < 20; ++i) {
        RelativePose p;
        p.delta = Vec2(u(rng), u(rng));
        p.radius = std::abs(u(rng));
        const double d = kde.density(p);
        CHECK(d >= 0.0);
        CHECK(shuffled.density(p) == doctest::Approx(d).epsilon(1e-12));
      }
    }
  }
  SUBCASE("bandwidth follows Scott's rule with a floor") {
    Builder b;
    for (int i = 0; i < 16; ++i) b.rel("chair", "desk", Vec2(i % 2 ? 1.0 : -1.0, 0.5), std::nullopt, 0.0);
    const PriorsDB db = b.learn();
    const RelPosKde& kde = db.relPos.at(key("chair", "desk"));
    // n = 16: sample std of +-1 alternating is sqrt(16/15), factor 16^(-1/6).
    CHECK(kde.bandwidth.x() == doctest::Approx(std::sqrt(16.0 / 15.0) * std::pow(16.0, -1.0 / 6.0)));
    CHECK(kde.bandwidth.y() == kMinBandwidth);
  }
  SUBCASE("mixing planar and radial offsets under one key is rejected") {
    Builder b;
    b.rel("chair", "desk", Vec2(1, 0), std::nullopt, 0.0);
    b.rel("chair", "desk", std::nullopt, 1.0, 0.0);
    CHECK_THROWS_AS(b.learn(), Error);
  }
  SUBCASE("unknown key falls back to epsilon") {
    Builder b;
    b.rel("chair", "desk", Vec2(1, 0), std::nullopt, 0.0);
    CHECK(b.learn().relposDensity(RelativePose{}, key("sofa", "desk")) == 1e-4);
  }
}

TEST_CASE("relative orientation histogram") {
  SUBCASE("everything at zero") {
    Builder b;
    for (int i = 0; i < 10; ++i) b.rel("chair", "desk", Vec2(0, 1), std::nullopt, 0.0);
    const PriorsDB db = b.learn();
    CHECK(db.relorientProbability(0.0, key("chair", "desk")) == doctest::Approx((10 + 1e-4) / (10 + 36e-4)));
    CHECK(db.relorientProbability(radians(365), key("chair", "desk")) ==
          db.relorientProbability(radians(5), key("chair", "desk")));
    CHECK(db.relorientProbability(radians(15), key("chair", "desk")) == doctest::Approx(1e-4 / (10 + 36e-4)));
  }
  SUBCASE("uniform angles spread evenly") {
    Builder b;
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, kTwoPi);
    for (int i = 0; i < 3600; ++i) b.rel("chair", "desk", Vec2(0, 1), std::nullopt, u(rng));
    const PriorsDB db = b.learn();
    for (int bin = 0; bin < 36; ++bin) {
      CHECK(std::abs(db.relOrient.at(key("chair", "desk")).mass(bin, 1e-4) - 1.0 / 36.0) <= 0.01);
    }
  }
  SUBCASE("bin edges") {
    CHECK(WrappedHistogram::binOf(0.0) == 0);
    CHECK(WrappedHistogram::binOf(radians(10) - 1e-9) == 0);
    CHECK(WrappedHistogram::binOf(radians(10) + 1e-9) == 1);
    CHECK(WrappedHistogram::binOf(-1e-9) == 35);
    CHECK(WrappedHistogram::binOf(kTwoPi) == 0);
  }
}

TEST_CASE("every stored distribution is normalized") {
  const PriorsDB& db = *officeWorld().priors;
  for (const auto& [k, h] : db.countHists) {
    double s = 0;
    for (const auto& [n, p] : h.probs()) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  for (const auto& [k, c] : db.faceCats) {
    double s = 0;
    for (AttachmentFace f : kAllFaces) s += c.probability(f);
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  for (const auto& [k, h] : db.relOrient) {
    double s = 0;
    for (int b = 0; b < 36; ++b) s += h.mass(b, db.settings.smoothingEpsilon);
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("learning") {
  SUBCASE("empty input") { CHECK_THROWS_AS(learnPriors({}, {}, priorModels()), Error); }
  SUBCASE("deterministic down to the bytes") {
    const OfficeWorld& w = officeWorld();
    const Corpus& c = w.generated.corpus;
    const PriorsDB again = learnPriors(w.observations, c.taxonomy, c.models);
    CHECK(again.toJson().dump() == w.priors->toJson().dump());
  }
  SUBCASE("architecture categories and shapes are recorded") {
    const PriorsDB& db = *officeWorld().priors;
    CHECK(db.architectureCategories == std::set<std::string>{"room"});
    CHECK(db.categoryShapes.at("poster") == ShapeClass::Flat);
  }
}

TEST_CASE("priors files") {
  const auto dir = scratchDir("priors");
  const PriorsDB& db = *officeWorld().priors;
  savePriors(db, dir / "p.json");

  SUBCASE("round trip answers every query identically") {
    const PriorsDB back = loadPriors(dir / "p.json");
    CHECK(back == db);
    for (const auto& [k, h] : db.countHists) {
      for (int n = 0; n < 4; ++n) {
        CHECK(back.occurrenceProbability(k.child, k.parent, k.sceneType, n) ==
              db.occurrenceProbability(k.child, k.parent, k.sceneType, n));
      }
    }
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-2, 2);
    for (const auto& [k, kde] : db.relPos) {
      RelativePose p;
      p.delta = Vec2(u(rng), u(rng));
      p.radius = std::abs(p.delta.x());
      p.theta = wrapAngle(3 * u(rng));
      CHECK(back.relposDensity(p, k) == db.relposDensity(p, k));
      CHECK(back.relorientProbability(p.theta, k) == db.relorientProbability(p.theta, k));
    }
  }
  SUBCASE("truncated file") {
    std::ifstream in(dir / "p.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::ofstream(dir / "cut.json") << text.substr(0, text.size() / 2);
    try {
      loadPriors(dir / "cut.json");
      FAIL("expected a corrupt file error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::CorruptFile);
    }
  }
  SUBCASE("older format version") {
    nlohmann::json j = db.toJson();
    j["formatVersion"] = 0;
    try {
      PriorsDB::fromJson(j);
      FAIL("expected a format version error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::FormatVersion);
    }
  }
  SUBCASE("inconsistent content") {
    nlohmann::json j = db.toJson();
    j["relOrient"].erase(0);
    CHECK_THROWS_AS(PriorsDB::fromJson(j), Error);
    j = db.toJson();
    j["countHists"].push_back(j["countHists"][0]);
    CHECK_THROWS_AS(PriorsDB::fromJson(j), Error);
  }
  SUBCASE("missing file") {
    try {
      loadPriors(dir / "absent.json");
      FAIL("expected an io error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Io);
    }
  }
}
