#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <string>
#include <string_view>

namespace scenehint {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kUnitTolerance = 1e-6;

/// Wraps an angle into [0, 2pi).
double wrapAngle(double radians);

/// Returns true if |v| is 1 within kUnitTolerance.
bool isUnit(const Vec3& v);

/// Homogeneous 4x4 transform, stored column-major like the scene files.
/// The linear part is always rotation x positive diagonal scale.
class Transform {
 public:
  Transform() : m_(Mat4::Identity()) {}

  /// Throws Error(InvalidInput) when the matrix violates the invariants.
  static Transform fromColumnMajor(std::span<const double> values);
  static Transform fromMatrix(const Mat4& m);
  static Transform fromRotationTranslation(const Mat3& rotation, const Vec3& translation);

  const Mat4& matrix() const { return m_; }
  Mat3 linear() const { return m_.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return m_.topRightCorner<3, 1>(); }

  Vec3 applyPoint(const Vec3& p) const { return linear() * p + translation(); }
  Vec3 applyVector(const Vec3& v) const { return linear() * v; }

  std::array<double, 16> columnMajor() const;

  bool operator==(const Transform& other) const { return m_ == other.m_; }

 private:
  explicit Transform(const Mat4& m) : m_(m) {}
  Mat4 m_;
};

// ---------------------------------------------------------------------------
// Surface and attachment features

enum class NormalClass { Up, Down, Horizontal };
enum class Interiority { Interior, Exterior };

struct SurfaceType {
  NormalClass normalClass = NormalClass::Up;
  Interiority interiority = Interiority::Interior;

  static constexpr int kCount = 6;

  /// Dense index in [0, 6), ordered up-interior, up-exterior, down-..., horizontal-...
  int index() const;
  static SurfaceType fromIndex(int index);
  std::string toString() const;
  /// Parses "up-interior" style names; throws Error(Parse).
  static SurfaceType parse(std::string_view name);

  auto operator<=>(const SurfaceType&) const = default;
};

enum class AttachmentFace { Top, Bottom, Front, Back, Left, Right };

inline constexpr std::array<AttachmentFace, 6> kAllFaces = {
    AttachmentFace::Top,  AttachmentFace::Bottom, AttachmentFace::Front,
    AttachmentFace::Back, AttachmentFace::Left,   AttachmentFace::Right};

/// Tie-break order used whenever a face has to be picked among equals.
inline constexpr std::array<AttachmentFace, 6> kFaceTieBreakOrder = {
    AttachmentFace::Bottom, AttachmentFace::Back,  AttachmentFace::Left,
    AttachmentFace::Right,  AttachmentFace::Front, AttachmentFace::Top};

std::string_view toString(AttachmentFace face);
AttachmentFace parseFace(std::string_view name);
int faceIndex(AttachmentFace face);

/// Outward normal of a bbox face in the canonical frame (X right, Y front, Z up).
Vec3 canonicalFaceNormal(AttachmentFace face);
/// Canonical axis (0 = right/left, 1 = front/back, 2 = top/bottom).
int faceAxis(AttachmentFace face);
/// The face whose canonical outward normal is +/- the given axis.
AttachmentFace faceFromAxis(int axis, bool positive);

/// Classifies a world-space unit normal; world up is +Z and the up/down
/// cones are |n_z| > 0.707. Throws Error(InvalidInput) for non-unit normals.
SurfaceType featurizeSurface(const Vec3& normal, bool ownerIsArchitecture);

// ---------------------------------------------------------------------------
// Oriented boxes

struct OrientedBox {
  Vec3 center = Vec3::Zero();
  /// Unit axes in world space, indexed like the canonical frame.
  std::array<Vec3, 3> axes = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
  Vec3 halfExtents = Vec3::Zero();

  /// World-space outward normal of a face.
  Vec3 faceNormal(AttachmentFace face) const;
  Vec3 faceCenter(AttachmentFace face) const;
  /// Distance from p to the face rectangle (0 if p lies on it).
  double distanceToFace(const Vec3& p, AttachmentFace face) const;
};

// ---------------------------------------------------------------------------
// Relative pose on a support plane

/// Direction within the support plane used as an object's heading: its front
/// on up/down surfaces, its up on vertical (wall) surfaces, falling back to
/// the other axis when the preferred one is nearly perpendicular to the plane.
Vec3 inPlaneHeading(const Vec3& front, const Vec3& up, const Vec3& planeNormal,
                    NormalClass normalClass);

struct PoseAxes {
  Vec3 center;
  Vec3 front;
  Vec3 up;
};

struct RelativePose {
  Vec2 delta = Vec2::Zero();  // (x, y) in the reference frame, +Y = reference heading
  double radius = 0.0;        // |delta|
  double theta = 0.0;         // heading of obj relative to ref, ccw about the normal, [0, 2pi)
};

/// Offset and relative heading of `obj` with respect to `ref`, measured on the
/// support plane with normal `planeNormal`.
RelativePose relativePose(const PoseAxes& obj, const PoseAxes& ref, const Vec3& planeNormal,
                          NormalClass normalClass);

/// Inverse of relativePose's position part: the point at `delta` from the
/// reference center's projection onto the plane through `planePoint`.
Vec3 pointAtDelta(const PoseAxes& ref, const Vec3& planePoint, const Vec3& planeNormal,
                  NormalClass normalClass, const Vec2& delta);

}  // namespace scenehint
