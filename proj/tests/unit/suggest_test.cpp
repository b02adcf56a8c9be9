#include "test_support.hpp"

#include "scenehint/error.hpp"
#include "scenehint/suggest.hpp"

#include "unit.hpp"

#include <cmath>
#include <random>

using namespace scenehint;
using namespace scenehint::testing;

namespace {

const SurfaceType kUpInt{NormalClass::Up, Interiority::Interior};

Scene emptyRoom(const ModelDb& models) {
  Scene scene;
  scene.id = "empty";
  scene.sceneType = "office";
  scene.objects.push_back(roomInstance("room", models.at("room_a")));
  return scene;
}

const Suggestion& byCategory(const std::vector<Suggestion>& list, const std::string& category) {
  for (const auto& s : list) {
    if (s.category == category) return s;
  }
  FAIL("category missing: " << category);
  return list.front();
}

bool faceMapsToNormal(const Transform& t, const ModelMetadata& meta, AttachmentFace face, const Vec3& normal) {
  ModelInstance inst;
  inst.modelId = meta.modelId;
  inst.transform = t;
  return (instanceBox(inst, meta).faceNormal(face) + normal).norm() <= 1e-6;
}

// Heading of a world direction about +Z, measured ccw from +Y.
double headingFromY(const Vec3& dir) { return wrapAngle(std::atan2(-dir.x(), dir.y())); }

}  // namespace

TEST_CASE("context query from a parent point") {
  const auto& w = officeWorld();
  const Scene scene = officeScene(*w.models, Vec3::Zero(), 0.0);

  const ContextQuery top = makeContextQuery(scene, *w.models, "desk", Vec3(0.1, 0.1, 0.75));
  CHECK(top.surfaceNormal.isApprox(Vec3::UnitZ()));
  CHECK(top.surfaceType.toString() == "up-exterior");
  CHECK(top.parentCategory == "desk");
  CHECK(top.sceneType == "office");

  const ContextQuery floor = makeContextQuery(scene, *w.models, "room", Vec3(1.5, 1.0, 0.0));
  CHECK(floor.surfaceNormal.isApprox(Vec3::UnitZ()));
  CHECK(floor.surfaceType == kUpInt);

  const ContextQuery wall = makeContextQuery(scene, *w.models, "room", Vec3(3.0, 0.2, 1.2));
  CHECK(wall.surfaceNormal.isApprox(-Vec3::UnitX()));
  CHECK(wall.surfaceType.toString() == "horizontal-interior");

  try {
    (void)makeContextQuery(scene, *w.models, "nope", Vec3::Zero());
    FAIL("expected NotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotFound);
  }
  try {
    (void)makeContextQuery(scene, *w.models, "desk", Vec3::Zero(), Vec3(0, 0, 2));
    FAIL("expected InvalidInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidInput);
  }

  const auto hit = contextFromRay(scene, *w.models, Ray{Vec3(0, 0, 2), -Vec3::UnitZ()});
  REQUIRE(hit);
  CHECK(hit->parentId == "desk");
  CHECK(hit->pos.z() == doctest::Approx(0.75));
  CHECK_FALSE(contextFromRay(scene, *w.models, Ray{Vec3(0, 0, 5), Vec3::UnitZ()}));
}

TEST_CASE("position score neighbours") {
  const auto& w = officeWorld();
  const PriorsDB& db = *w.priors;
  const double eps = db.settings.smoothingEpsilon;

  SUBCASE("empty room: no siblings, the room is the only term") {
    const Scene scene = emptyRoom(*w.models);
    const ContextQuery q = makeContextQuery(scene, *w.models, "room", Vec3(0.5, 0.5, 0.0));
    const auto terms = rotationTerms(db, *w.models, "chair", q, AttachmentFace::Bottom);
    REQUIRE(terms.size() == 1);
    CHECK(evaluateRotationTerms({}, 1.0) == 0.0);

    // Stripping the parent term leaves the empty sibling sum.
    for (double alpha : {0.0, 1.0, 4.0}) {
      const double full = positionScore(db, *w.models, "chair", q, alpha);
      CHECK(full - evaluateRotationTerms(terms, alpha) == 0.0);
    }
  }

  SUBCASE("one sibling: sum of two independently evaluated products") {
    const Scene scene = officeScene(*w.models, Vec3::Zero(), 0.0);
    const Vec3 anchor(0.0, 0.9, 0.0);
    const ContextQuery q = makeContextQuery(scene, *w.models, "room", anchor, Vec3::UnitZ());
    const double alpha = kPi + radians(5.0);

    const ModelMetadata& chair = w.models->at("chair_a");
    const Transform t = composePlacement(anchor, Vec3::UnitZ(), AttachmentFace::Bottom, alpha, chair);
    const Vec3 front = t.linear() * chair.front;
    const double theta = headingFromY(front);
    CHECK(degrees(theta) == doctest::Approx(185.0).epsilon(1e-9));

    // Desk and room both face +Y and are centred over the origin, so the
    // candidate sits at (0, 0.9) in both frames.
    RelativePose pose;
    pose.delta = Vec2(0.0, 0.9);
    pose.radius = 0.9;
    pose.theta = theta;
    double expected = 0.0;
    for (const auto& [ref, rel] : {std::pair{std::string("desk"), Relationship::Sibling},
                                   std::pair{std::string("room"), Relationship::ChildParent}}) {
      const RelKey key{"chair", ref, "office", rel, kUpInt};
      const RelPosKde* kde = db.resolvePosition(key);
      const WrappedHistogram* hist = db.resolveOrientation(key);
      REQUIRE(kde != nullptr);
      REQUIRE(hist != nullptr);
      expected += kde->density(pose) * hist->mass(WrappedHistogram::binOf(theta), eps);
    }
    CHECK(positionScore(db, *w.models, "chair", q, alpha) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected > 0.0);
  }

  SUBCASE("two identical siblings swapped") {
    Scene a = officeScene(*w.models, Vec3::Zero(), 0.0);
    const ModelMetadata& book = w.models->at("book_a");
    a.objects.push_back(floorInstance("b1", book, Vec3(-0.3, 0.1, 0.75), 0.3, "desk"));
    a.objects.push_back(floorInstance("b2", book, Vec3(0.3, 0.1, 0.75), -0.3, "desk"));
    a.supportEdges.emplace_back("b1", "desk");
    a.supportEdges.emplace_back("b2", "desk");
    Scene b = a;
    std::swap(b.objects[2].transform, b.objects[3].transform);

    const ContextQuery qa = makeContextQuery(a, *w.models, "desk", Vec3(0.0, 0.1, 0.75));
    const ContextQuery qb = makeContextQuery(b, *w.models, "desk", Vec3(0.0, 0.1, 0.75));
    for (const std::string cat : {"book", "keyboard", "desk_lamp"}) {
      for (double alpha : {0.0, 0.7, 2.0, 5.5}) {
        CHECK(positionScore(db, *w.models, cat, qa, alpha) ==
              doctest::Approx(positionScore(db, *w.models, cat, qb, alpha)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("rotation maximizer") {
  SUBCASE("no terms or a flat sum gives zero") {
    CHECK(maximizeRotation({}) == 0.0);
    RotationTerm flat;
    flat.density = 2.0;
    flat.theta0 = 1.234;
    flat.mass.fill(0.5);
    CHECK(maximizeRotation({flat}) == 0.0);
  }

  SUBCASE("single peaked bin") {
    RotationTerm t;
    t.density = 1.0;
    t.theta0 = radians(30.0);
    t.mass.fill(0.01);
    t.mass[18] = 0.5;  // [180, 190) degrees
    CHECK(degrees(maximizeRotation({t})) == doctest::Approx(150.0));
  }

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto randomTerms = [&](int n) {
    std::vector<RotationTerm> terms(static_cast<std::size_t>(n));
    for (auto& t : terms) {
      t.density = u(rng);
      t.theta0 = u(rng) * kTwoPi;
      for (auto& m : t.mass) m = std::floor(u(rng) * 4.0) / 4.0;
    }
    return terms;
  };

  SUBCASE("agrees with a brute-force sweep") {
    for (int trial = 0; trial < 200; ++trial) {
      const auto terms = randomTerms(1 + trial % 4);
      const double alpha = maximizeRotation(terms);
      const double best = evaluateRotationTerms(terms, alpha);
      CHECK(alpha >= 0.0);
      CHECK(alpha < kTwoPi);

      // 0.01 degree steps visit every 10 degree bin piece of every term.
      double sweepBest = 0.0;
      for (int i = 0; i < 36000; ++i) {
        sweepBest = std::max(sweepBest, evaluateRotationTerms(terms, radians(i * 0.01)));
      }
      CHECK(best >= sweepBest);

      // When a whole degree attains the maximum, the smallest such degree is returned.
      for (int d = 0; d < 360; ++d) {
        if (evaluateRotationTerms(terms, radians(d)) == best) {
          CHECK(degrees(alpha) == doctest::Approx(d));
          break;
        }
      }
    }
  }

  SUBCASE("argmax unchanged when densities are scaled") {
    for (int trial = 0; trial < 100; ++trial) {
      auto terms = randomTerms(3);
      const double alpha = maximizeRotation(terms);
      for (auto& t : terms) t.density *= 7.5;
      CHECK(maximizeRotation(terms) == alpha);
    }
  }
}

TEST_CASE("chair in front of a desk turns toward it") {
  const auto& w = officeWorld();
  for (double yaw : {0.0, 0.5, kPi / 2, 2.0}) {
    const Scene scene = officeScene(*w.models, Vec3::Zero(), yaw);
    const Vec3 deskFront = Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Vec3::UnitY();
    const ContextQuery q = makeContextQuery(scene, *w.models, "room", Vec3(deskFront * 0.9), Vec3::UnitZ());
    const double alpha = optimizeRotation(*w.priors, *w.models, "chair", q, AttachmentFace::Bottom);
    const ModelMetadata& chair = w.models->at("chair_a");
    const Transform t = composePlacement(q.pos, q.surfaceNormal, AttachmentFace::Bottom, alpha, chair);
    const Vec3 front = t.linear() * chair.front;
    CAPTURE(yaw);
    CHECK(degrees(std::acos(std::clamp(front.dot(-deskFront), -1.0, 1.0))) <= 10.0);
  }
}

TEST_CASE("suggest ranking") {
  const auto& w = officeWorld();
  const PriorsDB& db = *w.priors;
  Scene scene = officeScene(*w.models, Vec3::Zero(), 0.0);

  const std::vector<ContextQuery> queries = {
      makeContextQuery(scene, *w.models, "desk", Vec3(0.2, 0.1, 0.75)),
      makeContextQuery(scene, *w.models, "room", Vec3(1.2, 0.0, 0.0)),
      makeContextQuery(scene, *w.models, "room", Vec3(0.0, 0.9, 0.0)),
      makeContextQuery(scene, *w.models, "room", Vec3(3.0, 0.4, 1.9)),
      makeContextQuery(scene, *w.models, "room", Vec3(3.0, 0.4, 0.3)),
      makeContextQuery(scene, *w.models, "desk", Vec3(0.7, 0.0, 0.4)),
  };

  SUBCASE("scores finite and placements valid") {
    for (const auto& q : queries) {
      const auto list = suggest(db, *w.models, q);
      CHECK(list.size() == w.models->categories().size() - 1);  // room excluded
      for (const auto& s : list) {
        CAPTURE(s.category);
        CHECK(std::isfinite(s.score));
        CHECK(s.score >= 0.0);
        CHECK(s.category != "room");
        CHECK_FALSE(s.memberModelIds.empty());
        CHECK(faceMapsToNormal(s.placement.transform, w.models->at(s.representativeModelId), s.placement.face,
                               q.surfaceNormal));
        CHECK(s.score == doctest::Approx(s.breakdown.occurrence * s.breakdown.surface +
                                         0.25 * s.breakdown.position));
      }
      for (std::size_t i = 1; i < list.size(); ++i) {
        const bool ordered = list[i - 1].score > list[i].score ||
                             (list[i - 1].score == list[i].score && list[i - 1].category < list[i].category);
        CHECK(ordered);
      }
    }
  }

  SUBCASE("repeated queries are identical") {
    for (const auto& q : queries) {
      CHECK(toJson(suggest(db, *w.models, q).front()).dump() == toJson(suggest(db, *w.models, q).front()).dump());
      const auto a = suggest(db, *w.models, q);
      const auto b = suggest(db, *w.models, q);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(toJson(a[i]).dump() == toJson(b[i]).dump());
    }
  }

  SUBCASE("zero position weight reduces to occurrence times surface") {
    SuggestOptions options;
    options.positionWeight = 0.0;
    for (const auto& q : queries) {
      const auto list = suggest(db, *w.models, q, options);
      std::vector<std::pair<double, std::string>> expected;
      for (const auto& s : list) {
        const int k = 0;  // no children under either parent besides the desk itself
        const double occ = db.occurrenceProbability(s.category, q.parentCategory, "office",
                                                    q.parentId == "room" && s.category == "desk" ? 1 : k);
        expected.emplace_back(-(occ * db.supportSurfaceProbability(q.surfaceType, s.category)), s.category);
      }
      std::sort(expected.begin(), expected.end());
      for (std::size_t i = 0; i < list.size(); ++i) {
        CHECK(list[i].category == expected[i].second);
        CHECK(list[i].score == -expected[i].first);
      }
    }
  }

  SUBCASE("desk top favours desk-borne categories") {
    const auto list = suggest(db, *w.models, queries[0]);
    auto rank = [&](const std::string& c) {
      for (std::size_t i = 0; i < list.size(); ++i) {
        if (list[i].category == c) return i;
      }
      return list.size();
    };
    CHECK(rank("monitor") < rank("chair"));
    CHECK(rank("keyboard") < rank("chair"));
  }

  SUBCASE("posters attach by their back on walls") {
    const auto list = suggest(db, *w.models, queries[3]);
    CHECK(byCategory(list, "poster").placement.face == AttachmentFace::Back);
    CHECK(list.front().category == "poster");
    CHECK(suggest(db, *w.models, queries[4]).front().category == "socket");
  }

  SUBCASE("occurrence never increases after inserting one more") {
    const ContextQuery before = makeContextQuery(scene, *w.models, "desk", Vec3(0.2, 0.1, 0.75));
    const double occ0 = byCategory(suggest(db, *w.models, before), "book").breakdown.occurrence;
    Scene more = scene;
    for (int i = 0; i < 3; ++i) {
      const std::string id = "book" + std::to_string(i);
      more.objects.push_back(floorInstance(id, w.models->at("book_a"), Vec3(-0.5 + 0.2 * i, -0.2, 0.75), 0.0, "desk"));
      more.supportEdges.emplace_back(id, "desk");
      const ContextQuery q = makeContextQuery(more, *w.models, "desk", Vec3(0.2, 0.1, 0.75));
      const double occ = byCategory(suggest(db, *w.models, q), "book").breakdown.occurrence;
      CHECK(occ <= occ0);
    }
  }

  SUBCASE("limit truncates") {
    SuggestOptions options;
    options.limit = 3;
    CHECK(suggest(db, *w.models, queries[0], options).size() == 3);
  }

  SUBCASE("empty model db") {
    CHECK(suggest(db, ModelDb{}, queries[0]).empty());
  }
}

TEST_CASE("keyword search over a hand-scored fixture") {
  ModelDb models;
  auto add = [&](const std::string& id, const std::string& category, const std::string& name,
                 std::vector<std::string> tags, const std::string& description) {
    ModelMetadata m = boxModel(id, category, Vec3(1, 1, 1));
    m.name = name;
    m.tags = std::move(tags);
    m.description = description;
    models.add(m);
  };
  add("m1", "chair", "Office Chair", {}, "");              // office, chair
  add("m2", "chair", "wooden seat", {}, "");               // chair
  add("m3", "stool", "stool", {"OFFICE", "chair-like"}, "");  // office, chair
  add("m4", "desk", "table", {}, "");                      // desk
  add("m5", "cabinet", "cabinet", {"desk"}, "for an office");  // office, desk

  const auto hits = keywordSearch(models, "office chair");
  REQUIRE(hits.size() == 4);
  CHECK(hits[0].modelId == "m1");
  CHECK(hits[0].score == 2);
  CHECK(hits[1].modelId == "m3");
  CHECK(hits[1].score == 2);
  CHECK(hits[2].modelId == "m2");
  CHECK(hits[2].score == 1);
  CHECK(hits[3].modelId == "m5");
  CHECK(hits[3].score == 1);

  const auto desk = keywordSearch(models, "DESK");
  REQUIRE(desk.size() == 2);
  CHECK(desk[0].modelId == "m4");
  CHECK(desk[1].modelId == "m5");
  CHECK(desk[0].score == desk[1].score);

  CHECK(keywordSearch(models, "").empty());
  CHECK(keywordSearch(models, "  ,, ").empty());
  CHECK(keywordSearch(models, "chair chair").front().score == 1);
  CHECK(keywordSearch(models, "office chair", 1).size() == 1);
  CHECK(tokenize("Wall-Art 2x") == std::vector<std::string>{"wall", "art", "2x"});
}

TEST_CASE("expand category") {
  const auto& w = officeWorld();
  const Scene scene = officeScene(*w.models, Vec3::Zero(), 0.0);
  const ContextQuery q = makeContextQuery(scene, *w.models, "room", Vec3(0.0, 0.9, 0.0));
  const auto list = suggest(*w.priors, *w.models, q);

  const Suggestion& chair = byCategory(list, "chair");
  const auto members = expandCategory(*w.models, "chair", chair);
  REQUIRE(members.size() == 3);
  for (const auto& m : members) {
    CAPTURE(m.modelId);
    CHECK(m.score == chair.score);
    CHECK(m.placement.face == chair.placement.face);
    CHECK(faceMapsToNormal(m.placement.transform, w.models->at(m.modelId), m.placement.face, q.surfaceNormal));
    const ModelMetadata& meta = w.models->at(m.modelId);
    // Same spin: every member's front points the same way.
    const Vec3 front = m.placement.transform.linear() * meta.front;
    const Vec3 repFront = chair.placement.transform.linear() * w.models->at(chair.representativeModelId).front;
    CHECK((front - repFront).norm() <= 1e-9);
  }
  CHECK(members[0].placement.transform.matrix().isApprox(chair.placement.transform.matrix()));

  CHECK(expandCategory(*w.models, "cabinet", byCategory(list, "cabinet")).size() == 1);
  CHECK(expandCategory(*w.models, "sofa", chair).empty());
}

TEST_CASE("suggestion json") {
  const auto& w = officeWorld();
  const Scene scene = officeScene(*w.models, Vec3::Zero(), 0.0);
  const ContextQuery q = makeContextQuery(scene, *w.models, "desk", Vec3(0.2, 0.1, 0.75));
  const auto j = toJson(suggest(*w.priors, *w.models, q).front());
  CHECK(j.at("placement").at("transform").size() == 16);
  CHECK(j.at("placement").at("face").is_string());
  CHECK(j.at("breakdown").contains("position"));
  const auto qj = toJson(q);
  CHECK(qj.at("surfaceType") == "up-exterior");
  CHECK(qj.at("parentId") == "desk");
}
