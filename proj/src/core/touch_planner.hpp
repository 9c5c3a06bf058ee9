// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "core/geometry.hpp"
#include "core/registration.hpp"

namespace avtp::touch {

// A guarded probing motion: a ray that stops at first contact.
struct TouchAction {
  geom::Ray ray;
};

// Stop probing when both pose deltas between consecutive acquisitions fall
// below these thresholds.
struct StopCriterion {
  double trans_thresh = 0.005;   // meters
  double rot_thresh_deg = 2.0;   // degrees
};

// Candidate touches: for each face of the axis-aligned box around the model
// at `estimate`, per_face rays start `standoff` outside the face and point
// inward along the face normal. Face order is +x, -x, +y, -y, +z, -z.
std::vector<TouchAction> sample_touch_actions(const geom::Pose& estimate,
                                              const geom::TriangleMesh& model,
                                              int per_face, double standoff,
                                              std::uint64_t seed);

// First intersection of the action ray with the model at `estimate`.
std::optional<geom::Vec3> predict_contact(const TouchAction& action,
                                          const geom::TriangleMesh& model,
                                          const geom::Pose& estimate);

// Belief after hypothetically measuring `predicted`: the predicted point and
// the last two actual contacts are matched to the model surface under
// `estimate`, the two resulting translation-invariant pairs are filtered on
// a copy of the state. Requires at least 2 prior contacts.
reg::FilterState hypothetical_update(const reg::FilterState& state,
                                     const geom::Vec3& predicted,
                                     const geom::PointCloud& recent_contacts,
                                     const geom::TriangleMesh& model,
                                     const geom::Pose& estimate, double rho);

// KL(posterior || prior) between the two Gaussian beliefs, closed form with
// d = 4. Errors on singular covariances.
double kl_divergence(const reg::FilterState& posterior,
                     const reg::FilterState& prior);

struct NbtSelection {
  TouchAction action;
  int index = -1;
  double kl = 0.0;
};

// Argmax of the hypothetical-update KL over candidate actions. Actions whose
// predicted measurement misses are excluded; ties break toward the lowest
// index; errors if every action misses.
NbtSelection select_nbt(const reg::FilterState& state,
                        const std::vector<TouchAction>& actions,
                        const geom::TriangleMesh& model,
                        const geom::Pose& estimate,
                        const geom::PointCloud& recent_contacts, double rho);

// True iff the history holds >= 2 poses and the last change is below the
// criterion in both translation and rotation.
bool should_stop(const std::vector<geom::Pose>& pose_history,
                 const StopCriterion& crit);

}  // namespace avtp::touch
