#include "scenehint/geometry.hpp"

#include "scenehint/error.hpp"

#include <algorithm>
#include <cmath>

namespace scenehint {

const char* toString(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "invalid-input";
    case ErrorCode::Parse: return "parse-error";
    case ErrorCode::FormatVersion: return "format-version-mismatch";
    case ErrorCode::Validation: return "validation-failure";
    case ErrorCode::CorruptFile: return "corrupt-file";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::Io: return "io-error";
  }
  return "unknown";
}

double wrapAngle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

bool isUnit(const Vec3& v) { return std::abs(v.norm() - 1.0) <= kUnitTolerance; }

// ---------------------------------------------------------------------------
// Transform

Transform Transform::fromColumnMajor(std::span<const double> values) {
  if (values.size() != 16) {
    throw Error(ErrorCode::InvalidInput,
                "transform needs 16 numbers, got " + std::to_string(values.size()));
  }
  Mat4 m;
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) m(r, c) = values[static_cast<std::size_t>(c * 4 + r)];
  return fromMatrix(m);
}

Transform Transform::fromMatrix(const Mat4& m) {
  if (!m.allFinite()) throw Error(ErrorCode::InvalidInput, "transform has non-finite entries");
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw Error(ErrorCode::InvalidInput, "transform bottom row must be (0,0,0,1)");
  }
  const Mat3 linear = m.topLeftCorner<3, 3>();
  if (!(linear.determinant() > 0.0)) {
    throw Error(ErrorCode::InvalidInput, "transform linear part must have positive determinant");
  }
  // rotation x diagonal scale <=> mutually orthogonal columns
  for (int i = 0; i < 3; ++i) {
    for (int j = i + 1; j < 3; ++j) {
      const double dot = linear.col(i).dot(linear.col(j));
      if (std::abs(dot) > 1e-6 * linear.col(i).norm() * linear.col(j).norm()) {
        throw Error(ErrorCode::InvalidInput, "transform linear part has shear");
      }
    }
  }
  return Transform(m);
}

Transform Transform::fromRotationTranslation(const Mat3& rotation, const Vec3& translation) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return Transform(m);
}

std::array<double, 16> Transform::columnMajor() const {
  std::array<double, 16> out{};
  for (int c = 0; c < 4; ++c)
    for (int r = 0; r < 4; ++r) out[static_cast<std::size_t>(c * 4 + r)] = m_(r, c);
  return out;
}

// ---------------------------------------------------------------------------
// Surface types and faces

int SurfaceType::index() const {
  const int normal = normalClass == NormalClass::Up ? 0 : normalClass == NormalClass::Down ? 1 : 2;
  return normal * 2 + (interiority == Interiority::Interior ? 0 : 1);
}

SurfaceType SurfaceType::fromIndex(int index) {
  if (index < 0 || index >= kCount) {
    throw Error(ErrorCode::InvalidInput, "surface type index out of range");
  }
  SurfaceType t;
  const int normal = index / 2;
  t.normalClass = normal == 0 ? NormalClass::Up : normal == 1 ? NormalClass::Down : NormalClass::Horizontal;
  t.interiority = index % 2 == 0 ? Interiority::Interior : Interiority::Exterior;
  return t;
}

std::string SurfaceType::toString() const {
  std::string out = normalClass == NormalClass::Up     ? "up"
                    : normalClass == NormalClass::Down ? "down"
                                                       : "horizontal";
  out += interiority == Interiority::Interior ? "-interior" : "-exterior";
  return out;
}

SurfaceType SurfaceType::parse(std::string_view name) {
  for (int i = 0; i < kCount; ++i) {
    const SurfaceType t = fromIndex(i);
    if (t.toString() == name) return t;
  }
  throw Error(ErrorCode::Parse, "unknown surface type '" + std::string(name) + "'");
}

std::string_view toString(AttachmentFace face) {
  switch (face) {
    case AttachmentFace::Top: return "top";
    case AttachmentFace::Bottom: return "bottom";
    case AttachmentFace::Front: return "front";
    case AttachmentFace::Back: return "back";
    case AttachmentFace::Left: return "left";
    case AttachmentFace::Right: return "right";
  }
  return "bottom";
}

AttachmentFace parseFace(std::string_view name) {
  for (AttachmentFace f : kAllFaces) {
    if (toString(f) == name) return f;
  }
  throw Error(ErrorCode::Parse, "unknown attachment face '" + std::string(name) + "'");
}

int faceIndex(AttachmentFace face) { return static_cast<int>(face); }

Vec3 canonicalFaceNormal(AttachmentFace face) {
  switch (face) {
    case AttachmentFace::Top: return Vec3::UnitZ();
    case AttachmentFace::Bottom: return -Vec3::UnitZ();
    case AttachmentFace::Front: return Vec3::UnitY();
    case AttachmentFace::Back: return -Vec3::UnitY();
    case AttachmentFace::Right: return Vec3::UnitX();
    case AttachmentFace::Left: return -Vec3::UnitX();
  }
  return -Vec3::UnitZ();
}

int faceAxis(AttachmentFace face) {
  switch (face) {
    case AttachmentFace::Left:
    case AttachmentFace::Right: return 0;
    case AttachmentFace::Front:
    case AttachmentFace::Back: return 1;
    case AttachmentFace::Top:
    case AttachmentFace::Bottom: return 2;
  }
  return 2;
}

AttachmentFace faceFromAxis(int axis, bool positive) {
  switch (axis) {
    case 0: return positive ? AttachmentFace::Right : AttachmentFace::Left;
    case 1: return positive ? AttachmentFace::Front : AttachmentFace::Back;
    default: return positive ? AttachmentFace::Top : AttachmentFace::Bottom;
  }
}

SurfaceType featurizeSurface(const Vec3& normal, bool ownerIsArchitecture) {
  if (!normal.allFinite() || !isUnit(normal)) {
    throw Error(ErrorCode::InvalidInput, "surface normal must be unit length");
  }
  SurfaceType t;
  if (normal.z() > 0.707) {
    t.normalClass = NormalClass::Up;
  } else if (normal.z() < -0.707) {
    t.normalClass = NormalClass::Down;
  } else {
    t.normalClass = NormalClass::Horizontal;
  }
  t.interiority = ownerIsArchitecture ? Interiority::Interior : Interiority::Exterior;
  return t;
}

// ---------------------------------------------------------------------------
// OrientedBox

Vec3 OrientedBox::faceNormal(AttachmentFace face) const {
  const Vec3 n = canonicalFaceNormal(face);
  const int axis = faceAxis(face);
  return n[axis] > 0 ? axes[static_cast<std::size_t>(axis)] : Vec3(-axes[static_cast<std::size_t>(axis)]);
}

Vec3 OrientedBox::faceCenter(AttachmentFace face) const {
  return center + faceNormal(face) * halfExtents[faceAxis(face)];
}

double OrientedBox::distanceToFace(const Vec3& p, AttachmentFace face) const {
  const int axis = faceAxis(face);
  const Vec3 offset = p - faceCenter(face);
  double sq = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double c = offset.dot(axes[static_cast<std::size_t>(k)]);
    if (k == axis) {
      sq += c * c;
    } else {
      const double excess = std::max(0.0, std::abs(c) - halfExtents[k]);
      sq += excess * excess;
    }
  }
  return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// Relative pose

namespace {

Vec3 projectOntoPlane(const Vec3& v, const Vec3& n) { return v - v.dot(n) * n; }

struct PlaneFrame {
  Vec3 ex;
  Vec3 ey;
};

PlaneFrame frameFor(const PoseAxes& ref, const Vec3& n, NormalClass cls) {
  const Vec3 ey = inPlaneHeading(ref.front, ref.up, n, cls);
  return {ey.cross(n), ey};
}

}  // namespace

Vec3 inPlaneHeading(const Vec3& front, const Vec3& up, const Vec3& planeNormal,
                    NormalClass normalClass) {
  const Vec3& preferred = normalClass == NormalClass::Horizontal ? up : front;
  const Vec3& secondary = normalClass == NormalClass::Horizontal ? front : up;
  Vec3 h = projectOntoPlane(preferred, planeNormal);
  if (h.norm() < 0.5) {
    const Vec3 alt = projectOntoPlane(secondary, planeNormal);
    if (alt.norm() > h.norm()) h = alt;
  }
  if (h.norm() < 1e-12) {
    // Only reachable with non-orthogonal input; pick any in-plane direction.
    h = projectOntoPlane(std::abs(planeNormal.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY(), planeNormal);
  }
  return h.normalized();
}

RelativePose relativePose(const PoseAxes& obj, const PoseAxes& ref, const Vec3& planeNormal,
                          NormalClass normalClass) {
  const Vec3 n = planeNormal.normalized();
  const PlaneFrame frame = frameFor(ref, n, normalClass);
  const Vec3 offset = projectOntoPlane(obj.center - ref.center, n);

  RelativePose pose;
  pose.delta = Vec2(offset.dot(frame.ex), offset.dot(frame.ey));
  pose.radius = pose.delta.norm();

  const Vec3 heading = inPlaneHeading(obj.front, obj.up, n, normalClass);
  // ccw about n starting at ey: cos(t) ey - sin(t) ex
  pose.theta = wrapAngle(std::atan2(-heading.dot(frame.ex), heading.dot(frame.ey)));
  return pose;
}

Vec3 pointAtDelta(const PoseAxes& ref, const Vec3& planePoint, const Vec3& planeNormal,
                  NormalClass normalClass, const Vec2& delta) {
  const Vec3 n = planeNormal.normalized();
  const PlaneFrame frame = frameFor(ref, n, normalClass);
  const Vec3 refOnPlane = ref.center - (ref.center - planePoint).dot(n) * n;
  return refOnPlane + delta.x() * frame.ex + delta.y() * frame.ey;
}

}  // namespace scenehint
