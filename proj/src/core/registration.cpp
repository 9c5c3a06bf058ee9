// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/registration.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include <Eigen/Cholesky>

#include "core/rng.hpp"

namespace avtp::reg {

namespace {
constexpr double kDegeneratePair = 1e-9;
}

Eigen::Matrix4d pseudo_measurement(const CorrespondencePair& pair) {
  const geom::Vec3 s = pair.scene_rel();
  const geom::Vec3 o = pair.model_rel();
  if (s.norm() <= kDegeneratePair || o.norm() <= kDegeneratePair) {
    throw std::invalid_argument("pseudo_measurement: degenerate pair");
  }
  const geom::Vec3 diff = s - o;
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  h.block<1, 3>(0, 1) = -diff.transpose();
  h.block<3, 1>(1, 0) = diff;
  h.block<3, 3>(1, 1) = geom::skew(s + o);
  return h;
}

Eigen::Matrix4d measurement_noise(const FilterState& state, double rho) {
  const Eigen::Matrix4d a =
      state.mean * state.mean.transpose() + state.covariance;
  return 0.25 * rho *
         (a.trace() * Eigen::Matrix4d::Identity() - a);
}

UpdateResult kalman_update(const FilterState& state, const Eigen::Matrix4d& h,
                           const Eigen::Matrix4d& noise) {
  const Eigen::Matrix4d innovation_cov =
      h * state.covariance * h.transpose() + noise;
  Eigen::LLT<Eigen::Matrix4d> llt(innovation_cov);
  if (llt.info() != Eigen::Success) {
    return {state, false};
  }
  const Eigen::Matrix4d gain =
      state.covariance * h.transpose() * llt.solve(Eigen::Matrix4d::Identity());
  const geom::Vec4 x = state.mean - gain * (h * state.mean);
  const double n = x.norm();
  if (!(n > 1e-12) || !x.allFinite()) {
    return {state, false};
  }
  Eigen::Matrix4d cov =
      (Eigen::Matrix4d::Identity() - gain * h) * state.covariance;
  FilterState out;
  out.mean = x / n;
  cov /= n * n;
  out.covariance = 0.5 * (cov + cov.transpose());
  return {out, true};
}

geom::Vec3 estimate_translation(const geom::Quat& rotation,
                                const geom::PointCloud& scene,
                                const geom::PointCloud& model) {
  if (scene.size() != model.size() || scene.empty()) {
    throw std::invalid_argument(
        "estimate_translation: clouds must be non-empty and index-matched");
  }
  geom::Vec3 acc = geom::Vec3::Zero();
  for (std::size_t i = 0; i < scene.size(); ++i) {
    acc += scene.points[i] - rotation.rotate(model.points[i]);
  }
  return acc / static_cast<double>(scene.size());
}

Correspondences find_correspondences(const geom::PointCloud& scene,
                                     const geom::PointCloud& model,
                                     const geom::Pose& current, int max_pairs,
                                     std::uint64_t seed, PairingMode mode) {
  if (scene.size() < 2) {
    throw std::runtime_error("find_correspondences: need at least 2 points");
  }
  if (model.empty()) {
    throw std::invalid_argument("find_correspondences: empty model cloud");
  }
  if (max_pairs < 1) {
    throw std::invalid_argument("find_correspondences: max_pairs must be >= 1");
  }

  Rng rng(seed);

  std::vector<int> selected(scene.size());
  for (std::size_t i = 0; i < selected.size(); ++i) {
    selected[i] = static_cast<int>(i);
  }
  const std::size_t cap = static_cast<std::size_t>(max_pairs) + 1;
  if (selected.size() > cap) {
    rng.shuffle(selected);
    selected.resize(cap);
  }

  geom::PointCloud transformed;
  transformed.points.reserve(model.size());
  for (const geom::Vec3& p : model.points) {
    transformed.points.push_back(current.apply(p));
  }
  const geom::KdTree tree(transformed);

  Correspondences out;
  out.matches.reserve(selected.size());
  for (int i : selected) {
    const auto nn = tree.nearest(scene.points[i]);
    out.matches.push_back({scene.points[i], model.points[nn.index]});
  }
  if (out.matches.size() < 2) {
    throw std::runtime_error("find_correspondences: fewer than 2 matches");
  }

  const auto push_pair = [&](const Match& a, const Match& b) {
    CorrespondencePair pair{a.scene, b.scene, a.model, b.model};
    if (pair.scene_rel().norm() > kDegeneratePair &&
        pair.model_rel().norm() > kDegeneratePair) {
      out.pairs.push_back(pair);
    }
  };

  if (mode == PairingMode::kPermutation) {
    std::vector<int> order(out.matches.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
      order[i] = static_cast<int>(i);
    }
    rng.shuffle(order);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      push_pair(out.matches[order[k]], out.matches[order[k + 1]]);
    }
  } else {
    for (std::size_t i = 0; i < out.matches.size(); ++i) {
      for (std::size_t j = i + 1; j < out.matches.size(); ++j) {
        push_pair(out.matches[i], out.matches[j]);
      }
    }
  }
  return out;
}

Result register_points(const geom::PointCloud& scene,
                       const geom::TriangleMesh& model,
                       const std::optional<geom::Pose>& init,
                       const Params& params, std::uint64_t seed,
                       const std::optional<FilterState>& prior) {
  if (scene.size() < 3) {
    throw std::invalid_argument("register_points: need at least 3 points");
  }
  if (params.rho <= 0.0 || params.max_iterations < 1) {
    throw std::invalid_argument("register_points: invalid params");
  }

  const geom::PointCloud model_cloud =
      geom::sample_mesh_surface(model, params.model_samples, seed);

  // One scene subsample per call: re-drawing the subset every iteration
  // would move the ICP fixed point and defeat the convergence thresholds.
  geom::PointCloud working = scene;
  const std::size_t cap =
      static_cast<std::size_t>(params.max_pairs_per_iter) + 1;
  if (params.pairing == PairingMode::kPermutation && working.size() > cap) {
    std::vector<int> keep(working.size());
    for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = static_cast<int>(i);
    Rng subsample_rng(derive_seed(seed, 0));
    subsample_rng.shuffle(keep);
    keep.resize(cap);
    geom::PointCloud subset;
    subset.points.reserve(cap);
    for (int i : keep) subset.points.push_back(working.points[i]);
    working = std::move(subset);
  }

  Result res;
  if (init) {
    res.pose = *init;
  } else {
    res.pose = geom::Pose{geom::Quat::identity(),
                          scene.centroid() - model_cloud.centroid()};
  }
  res.state = prior ? *prior
                    : FilterState::initial(params.init_covariance_scale);
  const Eigen::Matrix4d iter_covariance =
      prior ? prior->covariance
            : params.init_covariance_scale * Eigen::Matrix4d::Identity();

  // Matching happens in the model frame against one prebuilt tree (rigid
  // transforms preserve distances), instead of rebuilding a tree over the
  // transformed model every iteration.
  const geom::KdTree model_tree(model_cloud);
  const auto correspond = [&](const geom::Pose& pose,
                              std::uint64_t iter_seed) {
    const geom::Pose inv = pose.inverse();
    Correspondences corr;
    corr.matches.reserve(working.size());
    for (const geom::Vec3& s : working.points) {
      const auto nn = model_tree.nearest(inv.apply(s));
      corr.matches.push_back({s, nn.point});
    }
    const auto push_pair = [&](const Match& a, const Match& b) {
      CorrespondencePair pair{a.scene, b.scene, a.model, b.model};
      if (pair.scene_rel().norm() > kDegeneratePair &&
          pair.model_rel().norm() > kDegeneratePair) {
        corr.pairs.push_back(pair);
      }
    };
    if (params.pairing == PairingMode::kPermutation) {
      std::vector<int> order(corr.matches.size());
      for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = static_cast<int>(i);
      }
      Rng rng(iter_seed);
      rng.shuffle(order);
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        push_pair(corr.matches[order[k]], corr.matches[order[k + 1]]);
      }
    } else {
      for (std::size_t i = 0; i < corr.matches.size(); ++i) {
        for (std::size_t j = i + 1; j < corr.matches.size(); ++j) {
          push_pair(corr.matches[i], corr.matches[j]);
        }
      }
    }
    return corr;
  };

  for (int it = 1; it <= params.max_iterations; ++it) {
    res.iterations = it;

    const Correspondences corr = correspond(
        res.pose, derive_seed(seed, static_cast<std::uint64_t>(it)));
    if (corr.pairs.empty()) {
      throw std::runtime_error(
          "register_points: no usable correspondence pairs");
    }

    // With a handful of pairs one sweep moves the mean by only a fraction
    // of the residual (the gain is bounded by the per-update noise), which
    // can fall below the convergence threshold long before the estimate
    // reaches the data. Sparse mode therefore repeats the sweep on the same
    // correspondences until the quaternion stabilizes; directions the pairs
    // do not observe never receive an innovation and stay at the prior.
    const int max_sweeps =
        params.pairing == PairingMode::kAllPairs ? params.sparse_sweeps : 1;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      const geom::Vec4 sweep_start = res.state.mean;
      res.state.covariance = iter_covariance;
      for (const CorrespondencePair& pair : corr.pairs) {
        const Eigen::Matrix4d h = pseudo_measurement(pair);
        const Eigen::Matrix4d noise = measurement_noise(res.state, params.rho);
        const UpdateResult upd = kalman_update(res.state, h, noise);
        if (!upd.applied) ++res.skipped_updates;
        res.state = upd.state;
      }
      if ((res.state.mean - sweep_start).norm() < 1e-10) break;
    }

    const geom::Quat rotation = res.state.mean_quat();
    geom::PointCloud ms, mm;
    ms.points.reserve(corr.matches.size());
    mm.points.reserve(corr.matches.size());
    for (const Match& m : corr.matches) {
      ms.points.push_back(m.scene);
      mm.points.push_back(m.model);
    }
    const geom::Vec3 translation = estimate_translation(rotation, ms, mm);

    const geom::Pose next{rotation, translation};
    const double d_trans = (next.translation - res.pose.translation).norm();
    const double d_rot_deg =
        geom::quat_geodesic_angle(next.rotation, res.pose.rotation) * 180.0 /
        M_PI;
    res.pose = next;
    if (d_trans < params.conv_trans && d_rot_deg < params.conv_rot_deg) {
      res.converged = true;
      break;
    }
  }
  return res;
}

double mean_surface_residual(const geom::PointCloud& scene,
                             const geom::TriangleMesh& model,
                             const geom::Pose& pose) {
  if (scene.empty()) {
    throw std::invalid_argument("mean_surface_residual: empty cloud");
  }
  const geom::Pose inv = pose.inverse();
  double acc = 0.0;
  for (const geom::Vec3& p : scene.points) {
    const geom::Vec3 local = inv.apply(p);
    acc += (model.closest_surface_point(local) - local).norm();
  }
  return acc / static_cast<double>(scene.size());
}

Result register_points_multistart(
    const geom::PointCloud& scene, const geom::TriangleMesh& model,
    const geom::Pose& init, const Params& params, std::uint64_t seed,
    const std::optional<FilterState>& prior) {
  // Grid sized for tabletop prior uncertainty of a couple of centimeters
  // and ~10 degrees of yaw.
  const std::array<double, 5> yaws = {0.0, -6.0, 6.0, -12.0, 12.0};
  const std::array<double, 5> steps = {0.0, -0.008, 0.008, -0.016, 0.016};

  std::optional<Result> best;
  double best_residual = 0.0;
  for (double yaw_deg : yaws) {
    const geom::Quat rot =
        yaw_deg == 0.0
            ? init.rotation
            : quat_mul(geom::Quat::from_axis_angle(geom::Vec3::UnitZ(),
                                                   yaw_deg * M_PI / 180.0),
                       init.rotation)
                  .normalized();
    for (double dx : steps) {
      for (double dy : steps) {
        const geom::Pose start{rot,
                               init.translation + geom::Vec3(dx, dy, 0.0)};
        Result res;
        try {
          res = register_points(scene, model, start, params, seed, prior);
        } catch (const std::runtime_error&) {
          continue;  // degenerate correspondences from this start
        }
        const double residual = mean_surface_residual(scene, model, res.pose);
        if (!best || residual < best_residual) {
          best = res;
          best_residual = residual;
        }
      }
    }
  }
  if (!best) {
    throw std::runtime_error(
        "register_points_multistart: every start failed");
  }
  return *best;
}

}  // namespace avtp::reg
