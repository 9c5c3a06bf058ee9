// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "core/geometry.hpp"

namespace avtp::declutter {

using Vec2 = Eigen::Vector2d;

// Per-pixel object labels, 0 = background. Pixel (x, y) covers the unit
// square [x, x+1] x [y, y+1]; contours live on this corner lattice.
struct SegMask {
  int width = 0;
  int height = 0;
  std::vector<int> labels;  // row-major

  int at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  double diagonal() const {
    return std::sqrt(static_cast<double>(width) * width +
                     static_cast<double>(height) * height);
  }
};

struct RotatedRect {
  Vec2 center = Vec2::Zero();
  Vec2 size = Vec2::Zero();  // (extent along angle, extent across)
  double angle = 0.0;        // radians

  double area() const { return size.x() * size.y(); }
  std::array<Vec2, 4> corners() const;
};

struct GraspPose {
  Vec2 pixel = Vec2::Zero();
  double angle = 0.0;  // radians, gripper closing line in the image
};

struct Detection {
  int id = 0;
  std::vector<Vec2> contour;  // closed simple polygon (last != first)
  RotatedRect box;
  Vec2 centroid = Vec2::Zero();
  double pixel_count = 0.0;
  double grasp_quality = 0.0;          // filled by the quality provider
  std::optional<GraspPose> grasp_pose;
};

enum class Action { kGrasp, kPush };

struct GraphEdge {
  int parent = -1;
  double weight = 0.0;
  Action action = Action::kPush;
  bool action_set = false;
};

// Directed tree over detections, rooted at the target. Every non-root
// vertex has exactly one incoming edge.
struct DeclutterGraph {
  int root = -1;
  std::map<int, Detection> vertices;
  std::map<int, GraphEdge> incoming;  // keyed by child id; root absent

  bool is_leaf(int id) const;
  std::vector<int> leaves() const;  // ascending id, root excluded
};

struct PushPlan {
  Vec2 point_px = Vec2::Zero();
  Vec2 dir_px = Vec2::UnitX();  // unit
  double distance = 0.05;       // meters
  // World-frame lift, filled by callers that own the camera geometry.
  std::optional<geom::Vec3> point_world;
  std::optional<geom::Vec3> dir_world;
};

struct GraspPlan {
  geom::Vec3 point = geom::Vec3::Zero();  // world
  double angle = 0.0;                     // radians
  geom::Vec3 place = geom::Vec3::Zero();  // world, inside the discard zone
};

// Fixed drop-off slots for grasped objects.
struct DiscardZone {
  std::vector<geom::Vec3> slots;
  std::size_t used = 0;
};

// Contour, min-area box and centroid of each labeled object; for an id with
// several 4-connected components only the largest is kept.
std::vector<Detection> extract_detections(const SegMask& mask);

// Intersection over union of two rotated boxes by polygon clipping.
double iou(const RotatedRect& a, const RotatedRect& b);

// Minimum distance between two contours (0 when they touch or intersect).
double min_contour_distance(const std::vector<Vec2>& a,
                            const std::vector<Vec2>& b);

struct GraphParams {
  double mu_o = 0.05;          // IoU threshold
  double mu_d = 0.5;           // distance threshold, fraction of image diagonal
  double image_diagonal = 1.0; // pixels, for distance normalization
};

// Pairwise edge weight: IoU if above mu_o, else 1/d_norm if the normalized
// contour distance is below mu_d, else 0.
double edge_weight(const Detection& a, const Detection& b,
                   const GraphParams& params);

// Builds the tree by layered expansion from the target over nonzero-weight
// adjacency; each vertex attaches through its highest-weight edge into the
// already-explored set (ties toward the lower parent id). Vertices with no
// nonzero path attach directly to the root with weight 1e-6.
DeclutterGraph build_graph(const std::vector<Detection>& detections,
                           int target_id, const GraphParams& params);

// Labels each incoming edge grasp iff the child's quality >= mu_q.
void attribute_actions(DeclutterGraph& graph, double mu_q = 0.1);

struct NextObject {
  int id = 0;
  Action action = Action::kPush;
  double weight = 0.0;
};

// Leaf with the maximal incoming weight (ties toward the lower id), or
// nullopt when only the root remains (decluttering complete).
std::optional<NextObject> next_object(const DeclutterGraph& graph);

struct PushParams {
  double gripper_px = 8.0;   // gripper footprint edge, pixels
  int n_samples = 32;        // candidate push points (first is the nominal)
  double distance = 0.05;    // push length, meters
};

// Push direction away from the weighted clutter direction; push point on the
// object contour, refined to the candidate whose gripper-sized box has the
// smallest mean IoU against the other objects' boxes.
PushPlan plan_push(const SegMask& mask, int id,
                   const std::vector<Detection>& all_detections,
                   const PushParams& params, std::uint64_t seed);

// Grasp plan from the provider pose; `lift_px` maps a mask pixel to a world
// point (the caller owns the camera geometry). Consumes one discard slot.
GraspPlan plan_grasp(const Detection& detection, DiscardZone& zone,
                     const std::function<geom::Vec3(const Vec2&)>& lift_px);

// Removes a leaf vertex and its incoming edge.
void remove_and_update(DeclutterGraph& graph, int id);

}  // namespace avtp::declutter
