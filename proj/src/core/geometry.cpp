// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace avtp::geom {

namespace {
constexpr double kRayHitEps = 1e-9;  // hits closer than this are misses
}

Quat Quat::from_axis_angle(const Vec3& axis, double angle_rad) {
  const double n = axis.norm();
  if (n < kUnitTol) {
    throw std::invalid_argument("from_axis_angle: zero axis");
  }
  const Vec3 a = axis / n;
  const double h = 0.5 * angle_rad;
  const double s = std::sin(h);
  return {std::cos(h), a.x() * s, a.y() * s, a.z() * s};
}

Quat Quat::from_rotation_matrix(const Mat3& m) {
  // Shepperd's method: pick the largest diagonal combination.
  Quat q;
  const double tr = m.trace();
  if (tr > 0.0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (m(2, 1) - m(1, 2)) / s;
    q.y = (m(0, 2) - m(2, 0)) / s;
    q.z = (m(1, 0) - m(0, 1)) / s;
  } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2.0;
    q.w = (m(2, 1) - m(1, 2)) / s;
    q.x = 0.25 * s;
    q.y = (m(0, 1) + m(1, 0)) / s;
    q.z = (m(0, 2) + m(2, 0)) / s;
  } else if (m(1, 1) > m(2, 2)) {
    double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2.0;
    q.w = (m(0, 2) - m(2, 0)) / s;
    q.x = (m(0, 1) + m(1, 0)) / s;
    q.y = 0.25 * s;
    q.z = (m(1, 2) + m(2, 1)) / s;
  } else {
    double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2.0;
    q.w = (m(1, 0) - m(0, 1)) / s;
    q.x = (m(0, 2) + m(2, 0)) / s;
    q.y = (m(1, 2) + m(2, 1)) / s;
    q.z = 0.25 * s;
  }
  return q.normalized();
}

double Quat::norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

Quat Quat::normalized() const {
  const double n = norm();
  if (n < kUnitTol) {
    throw std::invalid_argument("Quat::normalized: near-zero quaternion");
  }
  return {w / n, x / n, y / n, z / n};
}

bool Quat::is_unit(double tol) const { return std::abs(norm() - 1.0) <= tol; }

Vec3 Quat::rotate(const Vec3& v) const {
  // q v q* expanded: v + 2 w (u x v) + 2 u x (u x v), u = (x, y, z).
  const Vec3 u(x, y, z);
  const Vec3 t = 2.0 * u.cross(v);
  return v + w * t + u.cross(t);
}

Quat quat_mul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Mat3 quat_to_rotmat(const Quat& q) {
  if (!q.is_unit()) {
    throw std::invalid_argument("quat_to_rotmat: non-unit quaternion");
  }
  const double w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 m;
  m << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return m;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
      v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

double quat_geodesic_angle(const Quat& a, const Quat& b) {
  const Quat an = a.normalized();
  const Quat bn = b.normalized();
  double d = std::abs(an.w * bn.w + an.x * bn.x + an.y * bn.y + an.z * bn.z);
  d = std::min(d, 1.0);
  return 2.0 * std::acos(d);
}

double quat_chordal_dist(const Quat& a, const Quat& b) {
  const double dm = (a.coeffs() - b.coeffs()).norm();
  const double dp = (a.coeffs() + b.coeffs()).norm();
  return std::min(dm, dp);
}

Pose Pose::inverse() const {
  const Quat rc = rotation.conjugate();
  return {rc, -rc.rotate(translation)};
}

Pose Pose::operator*(const Pose& rhs) const {
  return {quat_mul(rotation, rhs.rotation).normalized(),
          rotation.rotate(rhs.translation) + translation};
}

Vec3 PointCloud::centroid() const {
  if (points.empty()) {
    throw std::invalid_argument("PointCloud::centroid: empty cloud");
  }
  Vec3 c = Vec3::Zero();
  for (const Vec3& p : points) c += p;
  return c / static_cast<double>(points.size());
}

// ---------------------------------------------------------------------------
// TriangleMesh

TriangleMesh TriangleMesh::create(std::vector<Vec3> vertices,
                                  std::vector<std::array<int, 3>> faces) {
  TriangleMesh mesh;
  mesh.vertices_ = std::move(vertices);
  const int nv = static_cast<int>(mesh.vertices_.size());
  mesh.faces_.reserve(faces.size());
  for (const auto& f : faces) {
    for (int k : f) {
      if (k < 0 || k >= nv) {
        throw std::invalid_argument("TriangleMesh: face index out of range");
      }
    }
    const Vec3& a = mesh.vertices_[f[0]];
    const Vec3& b = mesh.vertices_[f[1]];
    const Vec3& c = mesh.vertices_[f[2]];
    if ((b - a).cross(c - a).norm() <= 0.0) {
      continue;  // drop zero-area face
    }
    mesh.faces_.push_back(f);
  }
  mesh.cumulative_area_.resize(mesh.faces_.size());
  double acc = 0.0;
  Vec3 weighted = Vec3::Zero();
  for (std::size_t i = 0; i < mesh.faces_.size(); ++i) {
    const auto& f = mesh.faces_[i];
    const Vec3& a = mesh.vertices_[f[0]];
    const Vec3& b = mesh.vertices_[f[1]];
    const Vec3& c = mesh.vertices_[f[2]];
    const double area = 0.5 * (b - a).cross(c - a).norm();
    acc += area;
    mesh.cumulative_area_[i] = acc;
    weighted += area * (a + b + c) / 3.0;
  }
  mesh.total_area_ = acc;
  mesh.surface_centroid_ = acc > 0.0 ? Vec3(weighted / acc) : Vec3::Zero();
  mesh.bounds_.setEmpty();
  for (const Vec3& v : mesh.vertices_) mesh.bounds_.extend(v);
  mesh.build_bvh();
  return mesh;
}

double TriangleMesh::face_area(int f) const {
  const auto& face = faces_.at(static_cast<std::size_t>(f));
  const Vec3& a = vertices_[face[0]];
  const Vec3& b = vertices_[face[1]];
  const Vec3& c = vertices_[face[2]];
  return 0.5 * (b - a).cross(c - a).norm();
}

void TriangleMesh::build_bvh() {
  face_order_.resize(faces_.size());
  for (std::size_t i = 0; i < faces_.size(); ++i) {
    face_order_[i] = static_cast<int>(i);
  }
  nodes_.clear();
  if (!faces_.empty()) {
    build_node(0, static_cast<int>(faces_.size()));
  }
}

int TriangleMesh::build_node(int first, int count) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  Eigen::AlignedBox3d box;
  box.setEmpty();
  for (int i = first; i < first + count; ++i) {
    for (int k : faces_[face_order_[i]]) box.extend(vertices_[k]);
  }
  nodes_[id].box = box;
  if (count <= 4) {
    nodes_[id].first = first;
    nodes_[id].count = count;
    return id;
  }
  int axis = 0;
  box.sizes().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(
      face_order_.begin() + first, face_order_.begin() + mid,
      face_order_.begin() + first + count, [&](int fa, int fb) {
        const auto center = [&](int f) {
          const auto& t = faces_[f];
          return (vertices_[t[0]][axis] + vertices_[t[1]][axis] +
                  vertices_[t[2]][axis]);
        };
        const double ca = center(fa), cb = center(fb);
        return ca < cb || (ca == cb && fa < fb);
      });
  const int left = build_node(first, mid - first);
  const int right = build_node(mid, first + count - mid);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

namespace {

// Moller-Trumbore; returns t along the unit ray or nullopt.
std::optional<double> ray_triangle(const Ray& ray, const Vec3& a,
                                   const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 pvec = ray.direction.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-12) return std::nullopt;
  const double inv_det = 1.0 / det;
  const Vec3 tvec = ray.origin - a;
  const double u = tvec.dot(pvec) * inv_det;
  if (u < -1e-12 || u > 1.0 + 1e-12) return std::nullopt;
  const Vec3 qvec = tvec.cross(e1);
  const double v = ray.direction.dot(qvec) * inv_det;
  if (v < -1e-12 || u + v > 1.0 + 1e-12) return std::nullopt;
  const double t = e2.dot(qvec) * inv_det;
  if (t <= kRayHitEps) return std::nullopt;
  return t;
}

// Slab test against [0, closest-so-far].
bool box_hit(const Eigen::AlignedBox3d& box, const Ray& ray, double t_best) {
  double t0 = 0.0;
  double t1 = t_best;
  for (int k = 0; k < 3; ++k) {
    const double inv = 1.0 / ray.direction[k];
    double near = (box.min()[k] - ray.origin[k]) * inv;
    double far = (box.max()[k] - ray.origin[k]) * inv;
    if (inv < 0.0) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return false;
  }
  return true;
}

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b,
                               const Vec3& c) {
  // Ericson, Real-Time Collision Detection, 5.1.5.
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

}  // namespace

std::optional<RayHit> TriangleMesh::intersect(const Ray& model_ray) const {
  if (nodes_.empty()) return std::nullopt;
  RayHit best;
  best.distance = std::numeric_limits<double>::infinity();
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    const BvhNode& node = nodes_[id];
    if (!box_hit(node.box, model_ray, best.distance)) continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        const int f = face_order_[i];
        const auto& tri = faces_[f];
        const auto t = ray_triangle(model_ray, vertices_[tri[0]],
                                    vertices_[tri[1]], vertices_[tri[2]]);
        if (t && (*t < best.distance ||
                  (*t == best.distance && f < best.face))) {
          best.distance = *t;
          best.face = f;
        }
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  if (best.face < 0) return std::nullopt;
  best.point = model_ray.origin + best.distance * model_ray.direction;
  return best;
}

Vec3 TriangleMesh::closest_surface_point(const Vec3& query) const {
  if (faces_.empty()) {
    throw std::invalid_argument("closest_surface_point: empty mesh");
  }
  Vec3 best = Vec3::Zero();
  double best_d2 = std::numeric_limits<double>::infinity();
  for (const auto& f : faces_) {
    const Vec3 p = closest_point_on_triangle(query, vertices_[f[0]],
                                             vertices_[f[1]], vertices_[f[2]]);
    const double d2 = (p - query).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = p;
    }
  }
  return best;
}

std::optional<RayHit> ray_mesh_intersect(const Ray& ray,
                                         const TriangleMesh& mesh,
                                         const Pose& mesh_pose) {
  if (std::abs(ray.direction.norm() - 1.0) > kUnitTol) {
    throw std::invalid_argument("ray_mesh_intersect: direction not unit");
  }
  // Rigid transforms preserve ray parameterization; intersect in model frame.
  const Pose inv = mesh_pose.inverse();
  Ray local;
  local.origin = inv.apply(ray.origin);
  local.direction = inv.rotation.rotate(ray.direction);
  auto hit = mesh.intersect(local);
  if (!hit) return std::nullopt;
  hit->point = mesh_pose.apply(hit->point);
  return hit;
}

Eigen::AlignedBox3d mesh_aabb(const TriangleMesh& mesh, const Pose& pose) {
  Eigen::AlignedBox3d box;
  box.setEmpty();
  for (const Vec3& v : mesh.vertices()) box.extend(pose.apply(v));
  return box;
}

// ---------------------------------------------------------------------------
// KdTree

KdTree::KdTree(const PointCloud& cloud) : points_(cloud.points) {
  if (points_.empty()) {
    throw std::invalid_argument("KdTree: empty cloud");
  }
  std::vector<int> idx(points_.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()));
}

int KdTree::build(std::vector<int>& idx, int first, int count) {
  if (count <= 0) return -1;
  Eigen::AlignedBox3d box;
  box.setEmpty();
  for (int i = first; i < first + count; ++i) box.extend(points_[idx[i]]);
  int axis = 0;
  box.sizes().maxCoeff(&axis);
  const int mid = first + count / 2;
  std::nth_element(idx.begin() + first, idx.begin() + mid,
                   idx.begin() + first + count, [&](int a, int b) {
                     const double ca = points_[a][axis], cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{idx[mid], axis, -1, -1});
  const int left = build(idx, first, mid - first);
  const int right = build(idx, mid + 1, first + count - mid - 1);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search(int node, const Vec3& q, Result& best) const {
  if (node < 0) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  const double d2 = (p - q).squaredNorm();
  const double best_d2 = best.distance * best.distance;
  if (best.index < 0 || d2 < best_d2 ||
      (d2 == best_d2 && n.point < best.index)) {
    best.index = n.point;
    best.point = p;
    best.distance = std::sqrt(d2);
  }
  const double delta = q[n.axis] - p[n.axis];
  const int near = delta < 0.0 ? n.left : n.right;
  const int far = delta < 0.0 ? n.right : n.left;
  search(near, q, best);
  if (delta * delta <= best.distance * best.distance) {
    search(far, q, best);
  }
}

KdTree::Result KdTree::nearest(const Vec3& query) const {
  Result best;
  best.distance = std::numeric_limits<double>::infinity();
  search(root_, query, best);
  return best;
}

KdTree::Result nearest_neighbor(const Vec3& query, const PointCloud& cloud) {
  if (cloud.empty()) {
    throw std::invalid_argument("nearest_neighbor: empty cloud");
  }
  return KdTree(cloud).nearest(query);
}

// ---------------------------------------------------------------------------
// Surface sampling

PointCloud sample_mesh_surface(const TriangleMesh& mesh, int n,
                               std::uint64_t seed) {
  if (n < 1) {
    throw std::invalid_argument("sample_mesh_surface: n must be >= 1");
  }
  if (mesh.empty() || mesh.surface_area() <= 0.0) {
    throw std::invalid_argument("sample_mesh_surface: empty mesh");
  }
  Rng rng(seed);
  PointCloud cloud;
  cloud.points.reserve(static_cast<std::size_t>(n));
  const auto& cum = mesh.cumulative_area_;
  for (int i = 0; i < n; ++i) {
    const double r = rng.uniform() * mesh.surface_area();
    const auto it = std::lower_bound(cum.begin(), cum.end(), r);
    const std::size_t f = std::min<std::size_t>(
        static_cast<std::size_t>(it - cum.begin()), cum.size() - 1);
    const auto& tri = mesh.faces()[f];
    double u = rng.uniform();
    double v = rng.uniform();
    if (u + v > 1.0) {
      u = 1.0 - u;
      v = 1.0 - v;
    }
    const Vec3& a = mesh.vertices()[tri[0]];
    const Vec3& b = mesh.vertices()[tri[1]];
    const Vec3& c = mesh.vertices()[tri[2]];
    cloud.points.push_back(a + u * (b - a) + v * (c - a));
  }
  return cloud;
}

// ---------------------------------------------------------------------------
// OBJ subset

TriangleMesh parse_obj(const std::string& text) {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag.empty() || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      if (!(ls >> x >> y >> z)) {
        throw ConfigError("obj: malformed vertex at line " +
                          std::to_string(lineno));
      }
      vertices.emplace_back(x, y, z);
    } else if (tag == "f") {
      std::vector<int> poly;
      std::string item;
      while (ls >> item) {
        // "7", "7/1" and "7/1/3" all reference vertex 7.
        const std::size_t slash = item.find('/');
        const std::string head =
            slash == std::string::npos ? item : item.substr(0, slash);
        int idx = 0;
        try {
          idx = std::stoi(head);
        } catch (const std::exception&) {
          throw ConfigError("obj: malformed face index at line " +
                            std::to_string(lineno));
        }
        if (idx < 1 || idx > static_cast<int>(vertices.size())) {
          throw ConfigError("obj: face index out of range at line " +
                            std::to_string(lineno));
        }
        poly.push_back(idx - 1);
      }
      if (poly.size() < 3) {
        throw ConfigError("obj: face with fewer than 3 vertices at line " +
                          std::to_string(lineno));
      }
      for (std::size_t k = 1; k + 1 < poly.size(); ++k) {
        faces.push_back({poly[0], poly[k], poly[k + 1]});
      }
    }
    // other record types (vn, vt, o, g, s, mtllib, ...) are skipped
  }
  return TriangleMesh::create(std::move(vertices), std::move(faces));
}

TriangleMesh load_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open mesh file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_obj(buf.str());
}

}  // namespace avtp::geom
