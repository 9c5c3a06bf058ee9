// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "core/meshes.hpp"
#include "core/registration.hpp"
#include "core/rng.hpp"
#include "core/touch_planner.hpp"
#include "oracles.hpp"

using namespace avtp;
using namespace avtp::geom;
using namespace avtp::touch;

TEST_CASE("sample_touch_actions layout") {
  const TriangleMesh cube = oracles::centered_unit_cube();
  const int per_face = 20;
  const auto actions =
      sample_touch_actions(Pose::identity(), cube, per_face, 0.05, 3);
  REQUIRE(actions.size() == 6u * per_face);

  const Eigen::AlignedBox3d box = mesh_aabb(cube, Pose::identity());
  for (const TouchAction& a : actions) {
    CHECK(!box.contains(a.ray.origin));
    CHECK(std::abs(a.ray.direction.norm() - 1.0) < 1e-12);
    // The ray points back into the box along its face normal.
    bool inward = false;
    for (int axis = 0; axis < 3; ++axis) {
      if (a.ray.direction[axis] < -0.5 &&
          a.ray.origin[axis] > box.max()[axis]) {
        inward = true;
      }
      if (a.ray.direction[axis] > 0.5 && a.ray.origin[axis] < box.min()[axis]) {
        inward = true;
      }
    }
    CHECK(inward);
  }

  // +z face block: order is +x, -x, +y, -y, +z, -z.
  for (int i = 4 * per_face; i < 5 * per_face; ++i) {
    CHECK(actions[i].ray.origin.z() ==
          doctest::Approx(box.max().z() + 0.05).epsilon(1e-12));
    CHECK((actions[i].ray.direction - Vec3(0, 0, -1)).norm() < 1e-12);
  }

  const auto again =
      sample_touch_actions(Pose::identity(), cube, per_face, 0.05, 3);
  for (std::size_t i = 0; i < actions.size(); ++i) {
    CHECK((actions[i].ray.origin - again[i].ray.origin).norm() == 0.0);
  }

  // A flat square has a zero-thickness box.
  const TriangleMesh flat = TriangleMesh::create(
      {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}, {{0, 1, 2}, {0, 2, 3}});
  CHECK_THROWS_AS(sample_touch_actions(Pose::identity(), flat, 1, 0.05, 1),
                  std::invalid_argument);
  CHECK_THROWS_AS(sample_touch_actions(Pose::identity(), cube, 0, 0.05, 1),
                  std::invalid_argument);
}

TEST_CASE("predict_contact") {
  const TriangleMesh cube = oracles::centered_unit_cube();
  TouchAction down{Ray{{0.0, 0.0, 1.05}, {0.0, 0.0, -1.0}}};
  const auto hit = predict_contact(down, cube, Pose::identity());
  REQUIRE(hit.has_value());
  CHECK((*hit - Vec3(0, 0, 0.5)).norm() < 1e-12);

  TouchAction graze{Ray{{2.0, 2.0, 1.05}, {0.0, 0.0, -1.0}}};
  CHECK(!predict_contact(graze, cube, Pose::identity()).has_value());
}

TEST_CASE("hypothetical_update consistency and purity") {
  const TriangleMesh cube = oracles::centered_unit_cube();
  const Pose estimate = Pose::identity();

  reg::FilterState state = reg::FilterState::initial(0.3);
  const reg::FilterState before = state;

  // Contacts and predicted point exactly on the surface at the estimate:
  // every pair is consistent with the identity belief.
  PointCloud contacts;
  contacts.points = {{0.5, 0.1, 0.1}, {-0.1, 0.5, 0.2}};
  const Vec3 predicted(0.2, -0.1, 0.5);

  const reg::FilterState post =
      hypothetical_update(state, predicted, contacts, cube, estimate, 0.05);
  CHECK(quat_chordal_dist(post.mean_quat(), state.mean_quat()) < 1e-9);
  CHECK(post.covariance.trace() <= state.covariance.trace() + 1e-12);

  // Input state untouched.
  CHECK(std::memcmp(state.mean.data(), before.mean.data(),
                    4 * sizeof(double)) == 0);
  CHECK((state.covariance - before.covariance).norm() == 0.0);

  PointCloud one;
  one.points = {{0.5, 0.0, 0.0}};
  CHECK_THROWS_AS(
      hypothetical_update(state, predicted, one, cube, estimate, 0.05),
      std::runtime_error);
}

TEST_CASE("hypothetical_update equals a direct filter run on the same pairs") {
  const TriangleMesh cube = oracles::centered_unit_cube();
  Rng rng(51);
  const Pose estimate{oracles::random_rotation(rng, 0.3),
                      Vec3(0.02, -0.01, 0.0)};
  reg::FilterState state = reg::FilterState::initial(0.4);
  state.mean = estimate.rotation.coeffs();

  PointCloud contacts;
  contacts.points = {estimate.apply(Vec3(0.5, 0.2, -0.1)),
                     estimate.apply(Vec3(-0.2, 0.5, 0.3))};
  const Vec3 predicted = estimate.apply(Vec3(0.1, -0.3, 0.5));

  const reg::FilterState post =
      hypothetical_update(state, predicted, contacts, cube, estimate, 0.05);

  // Same pairing rule, driven through the registration module directly.
  const Pose inv = estimate.inverse();
  reg::FilterState manual = state;
  for (int k = 0; k < 2; ++k) {
    reg::CorrespondencePair pair;
    pair.scene_i = contacts.points[k];
    pair.scene_j = predicted;
    pair.model_i = cube.closest_surface_point(inv.apply(contacts.points[k]));
    pair.model_j = cube.closest_surface_point(inv.apply(predicted));
    manual = reg::kalman_update(manual, reg::pseudo_measurement(pair),
                                reg::measurement_noise(manual, 0.05))
                 .state;
  }
  CHECK((post.mean - manual.mean).norm() < 1e-15);
  CHECK((post.covariance - manual.covariance).norm() < 1e-15);
}

TEST_CASE("kl_divergence worked values") {
  reg::FilterState p = reg::FilterState::initial(0.1);
  CHECK(kl_divergence(p, p) >= -1e-9);
  CHECK(std::abs(kl_divergence(p, p)) <= 1e-10);

  reg::FilterState post = p;
  post.covariance = 0.05 * Eigen::Matrix4d::Identity();
  // 0.5 * (4 ln 2 + 4*0.5 - 4) = 2 ln 2 - 1.
  CHECK(kl_divergence(post, p) ==
        doctest::Approx(2.0 * std::log(2.0) - 1.0).epsilon(1e-12));

  reg::FilterState singular = p;
  singular.covariance = Eigen::Matrix4d::Zero();
  CHECK_THROWS_AS(kl_divergence(post, singular), std::runtime_error);
}

TEST_CASE("kl_divergence matches a Monte Carlo estimate") {
  Rng rng(52);
  reg::FilterState p, q;
  Eigen::Vector4d mp(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  p.mean = mp.normalized();
  q.mean = (p.mean + 0.2 * Eigen::Vector4d(rng.normal(), rng.normal(),
                                           rng.normal(), rng.normal()))
               .eval();
  Eigen::Matrix4d a = 0.3 * Eigen::Matrix4d::Random();
  p.covariance = a * a.transpose() + 0.05 * Eigen::Matrix4d::Identity();
  Eigen::Matrix4d b = 0.3 * Eigen::Matrix4d::Random();
  q.covariance = b * b.transpose() + 0.05 * Eigen::Matrix4d::Identity();

  const double closed = kl_divergence(p, q);
  const double mc =
      oracles::mc_kl_4d(p.mean, p.covariance, q.mean, q.covariance, 1000000, 53);
  CHECK(std::abs(closed - mc) <= 0.05 * std::abs(closed));
}

TEST_CASE("select_nbt argmax, miss handling, purity") {
  const TriangleMesh cube = oracles::centered_unit_cube();
  const Pose estimate = Pose::identity();
  reg::FilterState state = reg::FilterState::initial(0.4);
  PointCloud contacts;
  contacts.points = {{0.5, 0.1, 0.1}, {-0.1, 0.5, 0.2}, {0.0, -0.5, 0.1}};
  const reg::FilterState before = state;

  auto actions = sample_touch_actions(estimate, cube, 5, 0.05, 54);
  const NbtSelection sel =
      select_nbt(state, actions, cube, estimate, contacts, 0.05);
  CHECK(sel.index >= 0);

  double best = -1.0;
  int best_idx = -1;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto pred = predict_contact(actions[i], cube, estimate);
    if (!pred) continue;
    const auto post =
        hypothetical_update(state, *pred, contacts, cube, estimate, 0.05);
    const double kl = kl_divergence(post, state);
    if (best_idx < 0 || kl > best) {
      best = kl;
      best_idx = static_cast<int>(i);
    }
  }
  CHECK(sel.index == best_idx);
  CHECK(sel.kl == doctest::Approx(best).epsilon(1e-12));

  // State not mutated.
  CHECK(std::memcmp(state.mean.data(), before.mean.data(),
                    4 * sizeof(double)) == 0);
  CHECK((state.covariance - before.covariance).norm() == 0.0);

  // One contacting action is selected; a missing one is not.
  TouchAction hit_action{Ray{{0.0, 0.0, 1.05}, {0.0, 0.0, -1.0}}};
  TouchAction miss_action{Ray{{5.0, 5.0, 1.05}, {0.0, 0.0, -1.0}}};
  const auto only =
      select_nbt(state, {hit_action}, cube, estimate, contacts, 0.05);
  CHECK(only.index == 0);
  const auto paird = select_nbt(state, {miss_action, hit_action}, cube,
                                estimate, contacts, 0.05);
  CHECK(paird.index == 1);

  CHECK_THROWS_AS(
      select_nbt(state, {miss_action}, cube, estimate, contacts, 0.05),
      std::runtime_error);
  CHECK_THROWS_AS(select_nbt(state, {}, cube, estimate, contacts, 0.05),
                  std::invalid_argument);
}

TEST_CASE("should_stop") {
  const StopCriterion crit{0.005, 2.0};
  const Pose a{Quat::identity(), Vec3(0, 0, 0)};
  CHECK(!should_stop({}, crit));
  CHECK(!should_stop({a}, crit));
  CHECK(should_stop({a, a}, crit));

  // 4 mm translation + 1 degree rotation: below both thresholds.
  const Pose b{Quat::from_axis_angle({0, 0, 1}, 1.0 * M_PI / 180.0),
               Vec3(0.004, 0, 0)};
  CHECK(should_stop({a, b}, crit));

  // 4 mm + 3 degrees: rotation violates the conjunction.
  const Pose c{Quat::from_axis_angle({0, 0, 1}, 3.0 * M_PI / 180.0),
               Vec3(0.004, 0, 0)};
  CHECK(!should_stop({a, c}, crit));

  // Only the last change counts.
  CHECK(should_stop({c, a, b}, crit));
}
