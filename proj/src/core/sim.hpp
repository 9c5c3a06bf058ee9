// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/declutter.hpp"
#include "core/geometry.hpp"
#include "core/touch_planner.hpp"
#include "core/view_planner.hpp"

namespace avtp::sim {

// Deterministic stand-in for the sensing rig: depth and id images come from
// ray casting against ground-truth meshes, touches are guarded ray probes,
// pushes translate objects on the table plane, grasps remove them.

struct NoiseModel {
  double depth_sigma = 0.0;  // meters, along the ray
  double touch_sigma = 0.0;  // meters, isotropic
  // Systematic along-ray depth offset (ToF-style range error). This is what
  // leaves vision-only estimates with residual error that touch can correct.
  double depth_bias = 0.0;
};

struct SceneObject {
  int id = 0;
  std::string mesh_path;
  geom::TriangleMesh mesh;
  geom::Pose pose;  // ground truth
  bool is_target = false;
  double base_grasp_quality = 0.5;
};

struct Scene {
  std::vector<SceneObject> objects;
  Eigen::AlignedBox3d workspace;
  double table_height = 0.0;
  NoiseModel noise;
  // Loose analog of depth-defeating target surfaces: this fraction of the
  // target's depth returns is dropped (ids stay, the points vanish).
  bool degraded_depth_target = false;
  double degraded_drop_fraction = 0.8;
  std::vector<geom::Vec3> discard_slots;

  const SceneObject& target() const;
  const SceneObject* find(int id) const;
  SceneObject* find(int id);
};

// TOML-subset scene file: top-level scalars, [workspace]/[noise]/[discard]
// tables and [[object]] entries. Mesh paths resolve against the scene file's
// directory.
Scene load_scene(const std::string& path);
Scene parse_scene(const std::string& text, const std::string& base_dir);

struct RenderResult {
  int width = 0;
  int height = 0;
  view::Viewpoint view;
  view::SensorModel sensor;
  std::vector<int> ids;             // per pixel, 0 = table or nothing
  std::vector<std::uint8_t> valid;  // depth return present
  std::vector<geom::Vec3> points;   // world, meaningful where valid

  int count_id(int id) const;
  geom::PointCloud cloud() const;
  geom::PointCloud cloud_for_id(int id) const;
  declutter::SegMask mask() const;
  // World point for a pixel, if it has a depth return.
  std::optional<geom::Vec3> lift(int x, int y) const;
  // Lift with a small search ring for pixels whose own return was dropped.
  std::optional<geom::Vec3> lift_near(const declutter::Vec2& px,
                                      int max_ring = 3) const;
};

// One ray per sensor pixel against all objects and the table quad; nearest
// hit wins. Depth noise perturbs the hit along the ray. When solo_id >= 0
// only that object (plus the table) is rendered.
RenderResult render_depth(const Scene& scene, const view::Viewpoint& view,
                          const view::SensorModel& sensor,
                          const NoiseModel& noise, std::uint64_t seed,
                          int solo_id = -1);

struct TouchResult {
  geom::Vec3 point = geom::Vec3::Zero();
  int object_id = 0;
};

// Guarded probe: first contact over all objects, with isotropic noise on
// the contact point. Probes stopped by the table report a miss.
std::optional<TouchResult> simulate_touch(const Scene& scene,
                                          const touch::TouchAction& action,
                                          const NoiseModel& noise,
                                          std::uint64_t seed);

struct PushOutcome {
  geom::Vec3 applied_delta = geom::Vec3::Zero();
  bool clamped = false;  // push truncated at the workspace boundary
};

// Quasi-static push: pure translation on the table plane by
// plan.distance * plan.dir_world; orientation and height unchanged.
PushOutcome apply_push(Scene& scene, int id, const declutter::PushPlan& plan);

// Removes a non-target object (successful grasp outcome).
void apply_grasp_removal(Scene& scene, int id);

struct GraspQuality {
  double q = 0.0;
  std::optional<declutter::GraspPose> pose;
};

// Grasp affordance stub: configured base quality scaled by the visible
// fraction of the object's image footprint in the given view; the pose sits
// at the visible-region centroid with the angle along the minor axis of its
// min-area box.
GraspQuality grasp_quality_stub(const Scene& scene, int id,
                                const view::Viewpoint& view,
                                const view::SensorModel& sensor);

struct MetricsReport {
  double err_t = 0.0;      // meters
  double err_r_deg = 0.0;  // degrees
  double err_adi = 0.0;    // meters
};

// Translation / rotation errors plus the symmetric-tolerant average distance
// of model points between the two poses.
MetricsReport compute_metrics(const geom::Pose& est, const geom::Pose& gt,
                              const geom::PointCloud& model);

// Procedurally generated 5-object clutter scene used by the trend studies:
// an asymmetric target near the workspace center surrounded by clutter with
// mixed grasp qualities. Deterministic per seed.
struct SceneGenOptions {
  int n_clutter = 4;
  bool degraded_depth_target = false;
  double depth_sigma = 0.004;
  double touch_sigma = 0.0005;
  double depth_bias = 0.008;
};
Scene make_cluttered_scene(std::uint64_t seed, const SceneGenOptions& opts);

}  // namespace avtp::sim
