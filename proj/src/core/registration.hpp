// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "core/geometry.hpp"

namespace avtp::reg {

// Rigid registration of a scene cloud against a model mesh, estimating the
// rotation with a linear Kalman filter over translation-invariant point
// pairs and recovering the translation in closed form.
//
// For corresponding points s = R o + t, relative vectors s_ji = s_j - s_i
// and o_ji = o_j - o_i satisfy s_ji = R o_ji independent of t. Writing the
// rotation as a unit quaternion x, the constraint s~_ji (.) x - x (.) o~_ji
// = 0 (pure-quaternion embeddings) is linear in x:
//
//   H x = 0,  H = [ 0         -(s_ji - o_ji)^T      ]
//               [ s_ji - o_ji  skew(s_ji + o_ji)    ]
//
// which is fed to a Kalman filter as a zero-valued pseudo-measurement. The
// translation then follows as the mean of s_i - R o_i. An outer loop
// recomputes nearest-neighbor correspondences against the transformed model
// until the pose change falls below the convergence thresholds.

// Gaussian belief over the rotation quaternion (coefficients ordered
// w, x, y, z). The mean is kept unit-norm; the covariance is symmetric PSD.
struct FilterState {
  geom::Vec4 mean = geom::Vec4(1.0, 0.0, 0.0, 0.0);
  Eigen::Matrix4d covariance = Eigen::Matrix4d::Zero();

  static FilterState initial(double covariance_scale) {
    FilterState s;
    s.covariance = covariance_scale * Eigen::Matrix4d::Identity();
    return s;
  }
  geom::Quat mean_quat() const { return geom::Quat::from_coeffs(mean); }
};

// One translation-invariant measurement: two scene points and their matched
// model points. Relative vectors must be non-degenerate (> 1e-9).
struct CorrespondencePair {
  geom::Vec3 scene_i = geom::Vec3::Zero();
  geom::Vec3 scene_j = geom::Vec3::Zero();
  geom::Vec3 model_i = geom::Vec3::Zero();
  geom::Vec3 model_j = geom::Vec3::Zero();

  geom::Vec3 scene_rel() const { return scene_j - scene_i; }
  geom::Vec3 model_rel() const { return model_j - model_i; }
};

// How matches are turned into pairs. Dense clouds use consecutive elements
// of a seeded permutation (N matches -> N-1 pairs); sparse tactile clouds
// use every unordered pair to squeeze all information out of a handful of
// contacts.
enum class PairingMode { kPermutation, kAllPairs };

struct Params {
  double rho = 0.05;                  // correspondence uncertainty constant
  double conv_trans = 1e-4;           // convergence threshold, meters
  double conv_rot_deg = 0.1;          // convergence threshold, degrees
  int max_iterations = 100;
  int max_pairs_per_iter = 500;
  double init_covariance_scale = 0.5;
  int model_samples = 800;            // model cloud size sampled off the mesh
  PairingMode pairing = PairingMode::kPermutation;
  // Measurement sweeps per correspondence set in all-pairs mode. One sweep
  // under-relaxes against the prior; unbounded sweeps discard it.
  int sparse_sweeps = 2;
};

// Pseudo-measurement matrix H with H * x_true = 0. Rejects degenerate pairs.
Eigen::Matrix4d pseudo_measurement(const CorrespondencePair& pair);

// State-dependent measurement noise
//   (rho/4) * [tr(x x^T + Sigma) I4 - (x x^T + Sigma)].
Eigen::Matrix4d measurement_noise(const FilterState& state, double rho);

struct UpdateResult {
  FilterState state;
  bool applied = true;  // false when the innovation covariance was singular
};

// One Kalman step against the zero pseudo-measurement, followed by mean
// normalization and covariance rescaling by the squared pre-normalization
// norm. The covariance is symmetrized after the update.
UpdateResult kalman_update(const FilterState& state, const Eigen::Matrix4d& h,
                           const Eigen::Matrix4d& noise);

// Closed-form translation (1/N) sum(s_i - R o_i) over index-matched clouds.
geom::Vec3 estimate_translation(const geom::Quat& rotation,
                                const geom::PointCloud& scene,
                                const geom::PointCloud& model);

struct Match {
  geom::Vec3 scene = geom::Vec3::Zero();
  geom::Vec3 model = geom::Vec3::Zero();  // model frame (untransformed)
};

struct Correspondences {
  std::vector<Match> matches;
  std::vector<CorrespondencePair> pairs;
};

// Matches each (subsampled) scene point to the nearest model point under
// `current`, then forms pairs per `mode`. Degenerate pairs are dropped.
// Dense clouds are first subsampled to max_pairs + 1 points.
Correspondences find_correspondences(const geom::PointCloud& scene,
                                     const geom::PointCloud& model,
                                     const geom::Pose& current, int max_pairs,
                                     std::uint64_t seed,
                                     PairingMode mode = PairingMode::kPermutation);

struct Result {
  geom::Pose pose;
  FilterState state;
  int iterations = 0;
  bool converged = false;
  int skipped_updates = 0;
};

// Full registration loop. The model cloud is sampled internally as
// sample_mesh_surface(model, params.model_samples, seed); correspondences
// are nearest-neighbor matches against it under the current pose. Sparse
// all-pairs (tactile) callers should raise model_samples so the sampling
// spacing sits near the contact noise: the discrete matches both set the
// accuracy floor and pin the tangential sliding that flat faces would
// otherwise allow. When `init` is absent the initial pose is identity
// rotation with the translation aligning the model-cloud centroid to the
// scene centroid. The quaternion mean persists across outer iterations; the
// covariance is re-initialized (to the prior) each iteration so stale
// confidence from superseded correspondences cannot freeze the estimate.
// `prior`, when given, is the belief carried over from an earlier sensing
// stage (e.g. the vision posterior entering the tactile phase): the state
// starts there and the per-iteration covariance re-initialization restores
// the prior covariance instead of init_covariance_scale * I. Directions the
// new measurements cannot observe then stay anchored to the prior instead
// of drifting.
Result register_points(const geom::PointCloud& scene,
                       const geom::TriangleMesh& model,
                       const std::optional<geom::Pose>& init,
                       const Params& params, std::uint64_t seed,
                       const std::optional<FilterState>& prior = std::nullopt);

// Mean distance from the cloud to the mesh surface under a pose; the
// residual used to rank multi-start outcomes.
double mean_surface_residual(const geom::PointCloud& scene,
                             const geom::TriangleMesh& model,
                             const geom::Pose& pose);

// register_points restarted from a small grid of perturbed inits (yaw about
// z and in-plane nudges around `init`, the tabletop uncertainty directions);
// the candidate with the lowest mean surface residual wins, the unperturbed
// start winning ties. Sparse clouds with centimeter-level inits are prone
// to nearest-neighbor local minima that a single start cannot escape.
Result register_points_multistart(
    const geom::PointCloud& scene, const geom::TriangleMesh& model,
    const geom::Pose& init, const Params& params, std::uint64_t seed,
    const std::optional<FilterState>& prior = std::nullopt);

}  // namespace avtp::reg
