// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <set>

#include "core/error.hpp"
#include "core/geometry.hpp"
#include "core/rng.hpp"
#include "oracles.hpp"

using namespace avtp;
using namespace avtp::geom;

namespace {
const double kInvSqrt2 = std::sqrt(0.5);

TriangleMesh unit_square_z0() {
  return TriangleMesh::create(
      {{-0.5, -0.5, 0.0}, {0.5, -0.5, 0.0}, {0.5, 0.5, 0.0}, {-0.5, 0.5, 0.0}},
      {{0, 1, 2}, {0, 2, 3}});
}
}  // namespace

TEST_CASE("quat_mul identity and conjugate") {
  const Quat q = Quat::from_axis_angle({0.3, -0.4, 0.86}, 1.1);
  const Quat iq = quat_mul(Quat::identity(), q);
  CHECK(quat_chordal_dist(iq, q) < 1e-15);

  const Quat unit = quat_mul(q, q.conjugate());
  CHECK(std::abs(unit.w - 1.0) < 1e-12);
  CHECK(std::abs(unit.x) < 1e-12);
  CHECK(std::abs(unit.y) < 1e-12);
  CHECK(std::abs(unit.z) < 1e-12);
}

TEST_CASE("quat_mul composes two 90-degree z rotations into 180 degrees") {
  const Quat half{kInvSqrt2, 0.0, 0.0, kInvSqrt2};
  const Quat full = quat_mul(half, half);
  CHECK(std::abs(full.w) < 1e-12);
  CHECK(std::abs(full.x) < 1e-12);
  CHECK(std::abs(full.y) < 1e-12);
  CHECK(std::abs(full.z - 1.0) < 1e-12);
}

TEST_CASE("unit quaternions stay unit under multiplication") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const Quat p = oracles::random_rotation(rng);
    const Quat q = oracles::random_rotation(rng);
    CHECK(std::abs(quat_mul(p, q).norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("quat_to_rotmat basics") {
  CHECK((quat_to_rotmat(Quat::identity()) - Mat3::Identity()).norm() < 1e-15);

  const Quat qz = Quat{kInvSqrt2, 0.0, 0.0, kInvSqrt2}.normalized();
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((quat_to_rotmat(qz) - expected).norm() < 1e-9);

  CHECK_THROWS_AS(quat_to_rotmat(Quat{1.0, 0.2, 0.0, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("rotation matrix round trip") {
  Rng rng(12);
  for (int i = 0; i < 50; ++i) {
    const Quat q = oracles::random_rotation(rng);
    const Mat3 m = quat_to_rotmat(q);
    const Mat3 back = quat_to_rotmat(Quat::from_rotation_matrix(m));
    CHECK((m - back).norm() < 1e-9);
    CHECK(std::abs(m.determinant() - 1.0) < 1e-9);
    CHECK((m * m.transpose() - Mat3::Identity()).norm() < 1e-9);
  }
}

TEST_CASE("quat_to_rotmat is a homomorphism") {
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const Quat p = oracles::random_rotation(rng);
    const Quat q = oracles::random_rotation(rng);
    const Mat3 lhs = quat_to_rotmat(quat_mul(p, q).normalized());
    const Mat3 rhs = quat_to_rotmat(p) * quat_to_rotmat(q);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("skew matrix") {
  CHECK(skew(Vec3::Zero()).norm() == 0.0);
  CHECK((skew(Vec3(0, 2, 0)) * Vec3(0, 0, 1) - Vec3(2, 0, 0)).norm() < 1e-15);

  Rng rng(14);
  for (int i = 0; i < 20; ++i) {
    const Vec3 v(rng.normal(), rng.normal(), rng.normal());
    const Vec3 u(rng.normal(), rng.normal(), rng.normal());
    const Mat3 m = skew(v);
    CHECK((m + m.transpose()).norm() < 1e-15);
    CHECK((m * u - v.cross(u)).norm() < 1e-12);
    CHECK((m * v).norm() < 1e-12);
  }
}

TEST_CASE("pose composition and inverse") {
  Rng rng(15);
  for (int i = 0; i < 20; ++i) {
    const Pose p{oracles::random_rotation(rng),
                 Vec3(rng.normal(), rng.normal(), rng.normal())};
    const Pose id = p * p.inverse();
    CHECK(quat_geodesic_angle(id.rotation, Quat::identity()) < 1e-9);
    CHECK(id.translation.norm() < 1e-9);

    const Pose q{oracles::random_rotation(rng),
                 Vec3(rng.normal(), rng.normal(), rng.normal())};
    const Vec3 x(rng.normal(), rng.normal(), rng.normal());
    CHECK(((p * q).apply(x) - p.apply(q.apply(x))).norm() < 1e-12);
  }
}

TEST_CASE("ray_mesh_intersect against a unit square") {
  const TriangleMesh square = unit_square_z0();
  const Ray down{{0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}};
  const auto hit = ray_mesh_intersect(down, square, Pose::identity());
  REQUIRE(hit.has_value());
  CHECK(hit->point.norm() < 1e-12);
  CHECK(std::abs(hit->distance - 1.0) < 1e-12);

  const Ray away{{0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}};
  CHECK(!ray_mesh_intersect(away, square, Pose::identity()).has_value());
}

TEST_CASE("ray through stacked squares returns the nearer hit") {
  const TriangleMesh stacked = TriangleMesh::create(
      {{-0.5, -0.5, 0.0},
       {0.5, -0.5, 0.0},
       {0.5, 0.5, 0.0},
       {-0.5, 0.5, 0.0},
       {-0.5, -0.5, -0.5},
       {0.5, -0.5, -0.5},
       {0.5, 0.5, -0.5},
       {-0.5, 0.5, -0.5}},
      {{0, 1, 2}, {0, 2, 3}, {4, 5, 6}, {4, 6, 7}});
  const Ray down{{0.1, 0.1, 1.0}, {0.0, 0.0, -1.0}};
  const auto hit = ray_mesh_intersect(down, stacked, Pose::identity());
  REQUIRE(hit.has_value());
  CHECK(std::abs(hit->distance - 1.0) < 1e-12);
}

TEST_CASE("ray_mesh_intersect agrees with a brute-force triangle scan") {
  Rng rng(16);
  for (int trial = 0; trial < 4; ++trial) {
    const TriangleMesh mesh = oracles::random_triangle_soup(rng, 50);
    const Pose pose{oracles::random_rotation(rng),
                    Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2),
                         rng.uniform(-0.2, 0.2))};
    const Pose inv = pose.inverse();
    for (int i = 0; i < 25; ++i) {
      Ray ray;
      ray.origin =
          Vec3(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
      Vec3 dir(rng.normal(), rng.normal(), rng.normal());
      ray.direction = dir.normalized();
      const auto fast = ray_mesh_intersect(ray, mesh, pose);
      const Ray local{inv.apply(ray.origin),
                      inv.rotation.rotate(ray.direction)};
      const auto slow = oracles::brute_force_ray_mesh(local, mesh);
      REQUIRE(fast.has_value() == slow.has_value());
      if (fast) CHECK(std::abs(fast->distance - *slow) < 1e-9);
    }
  }
}

TEST_CASE("nearest_neighbor basics") {
  PointCloud cloud;
  cloud.points = {{0, 0, 0}, {1, 0, 0}};
  const auto exact = nearest_neighbor({1, 0, 0}, cloud);
  CHECK(exact.index == 1);
  CHECK(exact.distance == 0.0);

  CHECK(nearest_neighbor({0.6, 0, 0}, cloud).index == 1);
  CHECK(nearest_neighbor({0.5, 0, 0}, cloud).index == 0);  // tie -> lower

  CHECK_THROWS_AS(nearest_neighbor({0, 0, 0}, PointCloud{}),
                  std::invalid_argument);
}

TEST_CASE("kd-tree agrees with a linear scan") {
  Rng rng(17);
  PointCloud cloud;
  for (int i = 0; i < 400; ++i) {
    cloud.points.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1),
                              rng.uniform(-1, 1));
  }
  const KdTree tree(cloud);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 q(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2),
                 rng.uniform(-1.2, 1.2));
    const auto fast = tree.nearest(q);
    int best = 0;
    double best_d2 = (cloud.points[0] - q).squaredNorm();
    for (int k = 1; k < static_cast<int>(cloud.size()); ++k) {
      const double d2 = (cloud.points[k] - q).squaredNorm();
      if (d2 < best_d2) {
        best = k;
        best_d2 = d2;
      }
    }
    CHECK(fast.index == best);
  }
}

TEST_CASE("sample_mesh_surface basics") {
  const TriangleMesh tri =
      TriangleMesh::create({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1, 2}});
  const PointCloud one = sample_mesh_surface(tri, 1, 5);
  REQUIRE(one.size() == 1);
  const Vec3& p = one.points[0];
  CHECK(p.z() == 0.0);
  CHECK(p.x() >= -1e-12);
  CHECK(p.y() >= -1e-12);
  CHECK(p.x() + p.y() <= 1.0 + 1e-12);

  const PointCloud a = sample_mesh_surface(tri, 50, 9);
  const PointCloud b = sample_mesh_surface(tri, 50, 9);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a.points[i] - b.points[i]).norm() == 0.0);
  }

  CHECK_THROWS_AS(sample_mesh_surface(tri, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_mesh_surface(TriangleMesh{}, 1, 1),
                  std::invalid_argument);
}

TEST_CASE("surface sampling is area weighted") {
  // Two triangles with a 3:1 area ratio; counts follow a binomial, checked
  // at 3 sigma.
  const TriangleMesh two = TriangleMesh::create(
      {{0, 0, 0}, {3, 0, 0}, {0, 2, 0}, {10, 0, 0}, {11, 0, 0}, {10, 2, 0}},
      {{0, 1, 2}, {3, 4, 5}});
  const int n = 10000;
  const PointCloud cloud = sample_mesh_surface(two, n, 21);
  int big = 0;
  for (const Vec3& p : cloud.points) big += p.x() < 5.0 ? 1 : 0;
  const double sigma = std::sqrt(n * 0.75 * 0.25);
  CHECK(std::abs(big - 7500) <= 3.0 * sigma);
}

TEST_CASE("obj parsing") {
  const std::string text = R"(# comment
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
vn 0 0 1
f 1 2 3 4
)";
  const TriangleMesh mesh = parse_obj(text);
  CHECK(mesh.vertices().size() == 4);
  CHECK(mesh.faces().size() == 2);  // quad fan-triangulated

  CHECK_THROWS_AS(parse_obj("v 0 0 0\nf 1 2 9\n"), ConfigError);
  CHECK_THROWS_AS(parse_obj("v 0 0\n"), ConfigError);

  // Degenerate (collinear) faces are dropped on load.
  const TriangleMesh degen = parse_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n");
  CHECK(degen.faces().empty());

  // Slash-style face records reference the vertex index.
  const TriangleMesh slashed =
      parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2/2 3/3\n");
  CHECK(slashed.faces().size() == 1);
}
