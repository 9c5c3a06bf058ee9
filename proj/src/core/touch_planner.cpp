// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/touch_planner.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "core/rng.hpp"

namespace avtp::touch {

std::vector<TouchAction> sample_touch_actions(const geom::Pose& estimate,
                                              const geom::TriangleMesh& model,
                                              int per_face, double standoff,
                                              std::uint64_t seed) {
  if (per_face < 1) {
    throw std::invalid_argument("sample_touch_actions: per_face must be >= 1");
  }
  const Eigen::AlignedBox3d box = geom::mesh_aabb(model, estimate);
  if (box.isEmpty() || box.sizes().minCoeff() <= 1e-12) {
    throw std::invalid_argument("sample_touch_actions: degenerate box");
  }
  Rng rng(seed);
  std::vector<TouchAction> actions;
  actions.reserve(6u * static_cast<std::size_t>(per_face));
  // Faces in axis order, positive side first: +x, -x, +y, -y, +z, -z.
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      const bool positive = side == 0;
      const int u = (axis + 1) % 3;
      const int v = (axis + 2) % 3;
      for (int i = 0; i < per_face; ++i) {
        geom::Vec3 origin;
        origin[axis] = positive ? box.max()[axis] + standoff
                                : box.min()[axis] - standoff;
        origin[u] = rng.uniform(box.min()[u], box.max()[u]);
        origin[v] = rng.uniform(box.min()[v], box.max()[v]);
        geom::Vec3 dir = geom::Vec3::Zero();
        dir[axis] = positive ? -1.0 : 1.0;
        actions.push_back({geom::Ray{origin, dir}});
      }
    }
  }
  return actions;
}

std::optional<geom::Vec3> predict_contact(const TouchAction& action,
                                          const geom::TriangleMesh& model,
                                          const geom::Pose& estimate) {
  const auto hit = geom::ray_mesh_intersect(action.ray, model, estimate);
  if (!hit) return std::nullopt;
  return hit->point;
}

namespace {

// World point -> closest model-surface point, expressed in the model frame.
geom::Vec3 match_to_model(const geom::Vec3& world,
                          const geom::TriangleMesh& model,
                          const geom::Pose& estimate) {
  return model.closest_surface_point(estimate.inverse().apply(world));
}

}  // namespace

reg::FilterState hypothetical_update(const reg::FilterState& state,
                                     const geom::Vec3& predicted,
                                     const geom::PointCloud& recent_contacts,
                                     const geom::TriangleMesh& model,
                                     const geom::Pose& estimate, double rho) {
  if (recent_contacts.size() < 2) {
    throw std::runtime_error(
        "hypothetical_update: need at least 2 prior contacts");
  }
  const geom::Vec3 predicted_model = match_to_model(predicted, model, estimate);

  reg::FilterState out = state;
  const std::size_t n = recent_contacts.size();
  for (std::size_t k = n - 2; k < n; ++k) {
    const geom::Vec3& contact = recent_contacts.points[k];
    reg::CorrespondencePair pair;
    pair.scene_i = contact;
    pair.scene_j = predicted;
    pair.model_i = match_to_model(contact, model, estimate);
    pair.model_j = predicted_model;
    if (pair.scene_rel().norm() <= 1e-9 || pair.model_rel().norm() <= 1e-9) {
      continue;  // predicted point coincides with a contact
    }
    const Eigen::Matrix4d h = reg::pseudo_measurement(pair);
    const Eigen::Matrix4d noise = reg::measurement_noise(out, rho);
    out = reg::kalman_update(out, h, noise).state;
  }
  return out;
}

double kl_divergence(const reg::FilterState& posterior,
                     const reg::FilterState& prior) {
  Eigen::LLT<Eigen::Matrix4d> prior_llt(prior.covariance);
  if (prior_llt.info() != Eigen::Success) {
    throw std::runtime_error("kl_divergence: singular prior covariance");
  }
  Eigen::LLT<Eigen::Matrix4d> post_llt(posterior.covariance);
  if (post_llt.info() != Eigen::Success) {
    throw std::runtime_error("kl_divergence: singular posterior covariance");
  }
  const auto log_det = [](const Eigen::LLT<Eigen::Matrix4d>& llt) {
    const Eigen::Matrix4d l = llt.matrixL();
    double s = 0.0;
    for (int i = 0; i < 4; ++i) s += std::log(l(i, i));
    return 2.0 * s;
  };
  const double log_det_prior = log_det(prior_llt);
  const double log_det_post = log_det(post_llt);
  const double trace_term =
      prior_llt.solve(posterior.covariance).trace();
  const geom::Vec4 diff = posterior.mean - prior.mean;
  const double maha = diff.dot(prior_llt.solve(diff));
  return 0.5 * (log_det_prior - log_det_post + trace_term - 4.0 + maha);
}

NbtSelection select_nbt(const reg::FilterState& state,
                        const std::vector<TouchAction>& actions,
                        const geom::TriangleMesh& model,
                        const geom::Pose& estimate,
                        const geom::PointCloud& recent_contacts, double rho) {
  if (actions.empty()) {
    throw std::invalid_argument("select_nbt: no candidate actions");
  }
  if (recent_contacts.size() < 2) {
    throw std::runtime_error("select_nbt: need at least 2 prior contacts");
  }
  NbtSelection best;
  best.kl = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const auto predicted = predict_contact(actions[i], model, estimate);
    if (!predicted) continue;  // misses carry no information here
    const reg::FilterState post = hypothetical_update(
        state, *predicted, recent_contacts, model, estimate, rho);
    const double kl = kl_divergence(post, state);
    if (best.index < 0 || kl > best.kl) {
      best.action = actions[i];
      best.index = static_cast<int>(i);
      best.kl = kl;
    }
  }
  if (best.index < 0) {
    throw std::runtime_error(
        "select_nbt: every candidate action misses; re-sample with a larger "
        "standoff or box");
  }
  return best;
}

bool should_stop(const std::vector<geom::Pose>& pose_history,
                 const StopCriterion& crit) {
  if (pose_history.size() < 2) return false;
  const geom::Pose& a = pose_history[pose_history.size() - 2];
  const geom::Pose& b = pose_history.back();
  const double d_trans = (b.translation - a.translation).norm();
  const double d_rot_deg =
      geom::quat_geodesic_angle(b.rotation, a.rotation) * 180.0 / M_PI;
  return d_trans < crit.trans_thresh && d_rot_deg < crit.rot_thresh_deg;
}

}  // namespace avtp::touch
