// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace avtp::geom {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double kUnitTol = 1e-9;

// Hamilton quaternion, scalar first (w, x, y, z). Pure quaternions (w = 0)
// embed 3-vectors.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }
  static Quat pure(const Vec3& v) { return {0.0, v.x(), v.y(), v.z()}; }
  static Quat from_axis_angle(const Vec3& axis, double angle_rad);
  static Quat from_rotation_matrix(const Mat3& m);
  static Quat from_coeffs(const Vec4& wxyz) {
    return {wxyz[0], wxyz[1], wxyz[2], wxyz[3]};
  }

  Quat conjugate() const { return {w, -x, -y, -z}; }
  double norm() const;
  Quat normalized() const;
  bool is_unit(double tol = kUnitTol) const;
  Vec3 vec() const { return {x, y, z}; }
  Vec4 coeffs() const { return {w, x, y, z}; }
  Vec3 rotate(const Vec3& v) const;
};

// Hamilton product a (.) b.
Quat quat_mul(const Quat& a, const Quat& b);

// Unit quaternion -> SO(3) matrix. Rejects non-unit input.
Mat3 quat_to_rotmat(const Quat& q);

// Skew-symmetric cross-product matrix: skew(v) * u == v x u.
Mat3 skew(const Vec3& v);

// Rotation distance ignoring the q/-q double cover, radians in [0, pi].
double quat_geodesic_angle(const Quat& a, const Quat& b);

// min(|a - b|, |a + b|), the sign-insensitive chordal distance.
double quat_chordal_dist(const Quat& a, const Quat& b);

// Rigid transform: p -> R p + t.
struct Pose {
  Quat rotation = Quat::identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation.rotate(p) + translation; }
  Pose inverse() const;
  // Composition: (a * b).apply(p) == a.apply(b.apply(p)).
  Pose operator*(const Pose& rhs) const;
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();  // unit
};

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Vec3 centroid() const;
};

struct RayHit {
  Vec3 point = Vec3::Zero();  // world frame
  double distance = 0.0;      // along the ray, meters
  int face = -1;
};

// Triangle mesh with an internal AABB tree. Construction drops degenerate
// (zero-area) faces and validates indices; instances are immutable.
class TriangleMesh {
 public:
  TriangleMesh() = default;
  static TriangleMesh create(std::vector<Vec3> vertices,
                             std::vector<std::array<int, 3>> faces);

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& faces() const { return faces_; }
  bool empty() const { return faces_.empty(); }

  double face_area(int f) const;
  double surface_area() const { return total_area_; }
  // Area-weighted centroid of the surface.
  Vec3 surface_centroid() const { return surface_centroid_; }
  Eigen::AlignedBox3d bounds() const { return bounds_; }

  // Nearest hit with distance > 1e-9 (self-intersection guard), or nullopt.
  std::optional<RayHit> intersect(const Ray& model_ray) const;

  // Closest point on the surface to a model-frame query.
  Vec3 closest_surface_point(const Vec3& query) const;

 private:
  struct BvhNode {
    Eigen::AlignedBox3d box;
    int left = -1;    // child node, or -1 for leaf
    int right = -1;
    int first = 0;    // leaf: range into face_order_
    int count = 0;
  };

  void build_bvh();
  int build_node(int first, int count);

  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> faces_;
  std::vector<int> face_order_;
  std::vector<BvhNode> nodes_;
  std::vector<double> cumulative_area_;
  double total_area_ = 0.0;
  Vec3 surface_centroid_ = Vec3::Zero();
  Eigen::AlignedBox3d bounds_;

  friend PointCloud sample_mesh_surface(const TriangleMesh&, int,
                                        std::uint64_t);
};

// Nearest front-of-origin intersection of a world-frame ray with a posed
// mesh. Miss is a valid outcome.
std::optional<RayHit> ray_mesh_intersect(const Ray& ray,
                                         const TriangleMesh& mesh,
                                         const Pose& mesh_pose);

// Axis-aligned bounds of the mesh under a pose (over transformed vertices).
Eigen::AlignedBox3d mesh_aabb(const TriangleMesh& mesh, const Pose& pose);

// 3-d tree over a point cloud; the cloud is copied. Ties in distance are
// broken toward the lowest point index.
class KdTree {
 public:
  explicit KdTree(const PointCloud& cloud);

  struct Result {
    int index = -1;
    Vec3 point = Vec3::Zero();
    double distance = 0.0;
  };
  Result nearest(const Vec3& query) const;
  std::size_t size() const { return points_.size(); }

 private:
  struct Node {
    int point = -1;
    int axis = 0;
    int left = -1;
    int right = -1;
  };
  int build(std::vector<int>& idx, int first, int count);
  void search(int node, const Vec3& q, Result& best) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Nearest cloud point to the query (index, point); rejects empty clouds.
KdTree::Result nearest_neighbor(const Vec3& query, const PointCloud& cloud);

// n surface points, area-weighted face choice and uniform barycentric
// placement; deterministic per seed.
PointCloud sample_mesh_surface(const TriangleMesh& mesh, int n,
                               std::uint64_t seed);

// ASCII OBJ subset: v/f records only, 1-based indices, polygon faces
// fan-triangulated. Anything else is skipped.
TriangleMesh load_obj(const std::string& path);
TriangleMesh parse_obj(const std::string& text);

}  // namespace avtp::geom
