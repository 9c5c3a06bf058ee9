// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/view_planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "core/rng.hpp"

namespace avtp::view {

namespace {

// Binary entropy in bits of the probability behind a log-odds value.
double cell_entropy_bits(double logodds) {
  const double p = 1.0 / (1.0 + std::exp(-logodds));
  if (p <= 0.0 || p >= 1.0) return 0.0;
  return -(p * std::log2(p) + (1.0 - p) * std::log2(1.0 - p));
}

double clamp_logodds(double l) {
  return std::clamp(l, -OccupancyGrid::kClamp, OccupancyGrid::kClamp);
}

}  // namespace

double logodds_hit() { return std::log(0.7 / 0.3); }
double logodds_miss() { return std::log(0.4 / 0.6); }

OccupancyGrid OccupancyGrid::create(const geom::Vec3& origin,
                                    double resolution,
                                    const Eigen::Vector3i& dims) {
  if (resolution <= 0.0 || dims.minCoeff() < 1) {
    throw std::invalid_argument("OccupancyGrid: invalid resolution or dims");
  }
  OccupancyGrid g;
  g.origin = origin;
  g.resolution = resolution;
  g.dims = dims;
  g.logodds.assign(static_cast<std::size_t>(dims.x()) * dims.y() * dims.z(),
                   0.0);
  return g;
}

OccupancyGrid OccupancyGrid::around(const geom::Vec3& center, double margin,
                                    double resolution) {
  const int n = std::max(1, static_cast<int>(
                                std::ceil(2.0 * margin / resolution)));
  return create(center - geom::Vec3::Constant(margin), resolution,
                Eigen::Vector3i(n, n, n));
}

bool OccupancyGrid::contains(const geom::Vec3& p) const {
  for (int k = 0; k < 3; ++k) {
    const double rel = p[k] - origin[k];
    if (rel < 0.0 || rel >= resolution * dims[k]) return false;
  }
  return true;
}

Eigen::Vector3i OccupancyGrid::cell_of(const geom::Vec3& p) const {
  Eigen::Vector3i c;
  for (int k = 0; k < 3; ++k) {
    c[k] = static_cast<int>(std::floor((p[k] - origin[k]) / resolution));
  }
  return c;
}

geom::Vec3 OccupancyGrid::cell_center(const Eigen::Vector3i& c) const {
  return origin + resolution * (c.cast<double>() + geom::Vec3::Constant(0.5));
}

double grid_entropy(const OccupancyGrid& grid) {
  double h = 0.0;
  for (double l : grid.logodds) h += cell_entropy_bits(l);
  return h;
}

void traverse_segment(const OccupancyGrid& grid, const geom::Vec3& a,
                      const geom::Vec3& b,
                      const std::function<bool(int)>& visit) {
  const geom::Vec3 d = b - a;
  const double len = d.norm();
  if (len < 1e-15) {
    if (grid.contains(a)) {
      visit(grid.index(grid.cell_of(a).x(), grid.cell_of(a).y(),
                       grid.cell_of(a).z()));
    }
    return;
  }
  const geom::Vec3 dir = d / len;

  // Clip [0, len] to the grid box.
  double t0 = 0.0;
  double t1 = len;
  for (int k = 0; k < 3; ++k) {
    const double lo = grid.origin[k];
    const double hi = grid.origin[k] + grid.resolution * grid.dims[k];
    if (std::abs(dir[k]) < 1e-15) {
      if (a[k] < lo || a[k] >= hi) return;
      continue;
    }
    const double inv = 1.0 / dir[k];
    double tn = (lo - a[k]) * inv;
    double tf = (hi - a[k]) * inv;
    if (inv < 0.0) std::swap(tn, tf);
    t0 = std::max(t0, tn);
    t1 = std::min(t1, tf);
    if (t0 > t1) return;
  }

  const geom::Vec3 entry = a + dir * t0;
  Eigen::Vector3i cell = grid.cell_of(entry);
  for (int k = 0; k < 3; ++k) {
    cell[k] = std::clamp(cell[k], 0, grid.dims[k] - 1);
  }

  Eigen::Vector3i step = Eigen::Vector3i::Zero();
  geom::Vec3 t_max, t_delta;
  for (int k = 0; k < 3; ++k) {
    if (dir[k] > 0.0) {
      step[k] = 1;
      const double boundary = grid.origin[k] + (cell[k] + 1) * grid.resolution;
      t_max[k] = t0 + (boundary - entry[k]) / dir[k];
      t_delta[k] = grid.resolution / dir[k];
    } else if (dir[k] < 0.0) {
      step[k] = -1;
      const double boundary = grid.origin[k] + cell[k] * grid.resolution;
      t_max[k] = t0 + (boundary - entry[k]) / dir[k];
      t_delta[k] = -grid.resolution / dir[k];
    } else {
      t_max[k] = std::numeric_limits<double>::infinity();
      t_delta[k] = std::numeric_limits<double>::infinity();
    }
  }

  while (true) {
    if (!visit(grid.index(cell.x(), cell.y(), cell.z()))) return;
    int axis = 0;
    t_max.minCoeff(&axis);
    if (t_max[axis] > t1) return;  // segment ends inside this cell
    cell[axis] += step[axis];
    if (cell[axis] < 0 || cell[axis] >= grid.dims[axis]) return;
    t_max[axis] += t_delta[axis];
  }
}

namespace {

enum : std::uint8_t { kUntouched = 0, kMiss = 1, kHit = 2 };

void apply_flags(OccupancyGrid& grid, const std::vector<std::uint8_t>& flags) {
  const double l_hit = logodds_hit();
  const double l_miss = logodds_miss();
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == kHit) {
      grid.logodds[i] = clamp_logodds(grid.logodds[i] + l_hit);
    } else if (flags[i] == kMiss) {
      grid.logodds[i] = clamp_logodds(grid.logodds[i] + l_miss);
    }
  }
}

}  // namespace

void integrate_measurement(OccupancyGrid& grid,
                           const geom::Vec3& sensor_origin,
                           const geom::PointCloud& hits) {
  std::vector<std::uint8_t> flags(grid.cell_count(), kUntouched);
  for (const geom::Vec3& hit : hits.points) {
    int terminal = -1;
    if (grid.contains(hit)) {
      const Eigen::Vector3i c = grid.cell_of(hit);
      terminal = grid.index(c.x(), c.y(), c.z());
    }
    traverse_segment(grid, sensor_origin, hit, [&](int idx) {
      const std::uint8_t mark = idx == terminal ? kHit : kMiss;
      flags[idx] = std::max(flags[idx], mark);
      return true;
    });
  }
  apply_flags(grid, flags);
}

geom::Quat view_orientation(const geom::Vec3& p_view,
                            const geom::Vec3& centroid) {
  const geom::Vec3 offset = p_view - centroid;
  const double n = offset.norm();
  if (n < 1e-12) {
    throw std::invalid_argument("view_orientation: view at centroid");
  }
  const geom::Vec3 h = offset / n;
  const double cos_theta = std::clamp(h.dot(geom::Vec3::UnitZ()), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const geom::Vec3 cross = h.cross(geom::Vec3::UnitZ());
  const double s = cross.norm();
  const geom::Vec3 axis = s < 1e-12 ? geom::Vec3::UnitX() : geom::Vec3(cross / s);
  // Rotating +Z by (pi - theta) about the axis maps the boresight onto -h,
  // i.e. the camera looks at the centroid.
  return geom::Quat::from_axis_angle(axis, M_PI - theta);
}

std::vector<Viewpoint> sample_viewpoints(const geom::Vec3& centroid,
                                         double radius, int n,
                                         std::uint64_t seed,
                                         const Eigen::AlignedBox3d& workspace) {
  if (n < 1 || radius <= 0.0) {
    throw std::invalid_argument("sample_viewpoints: need n >= 1, radius > 0");
  }
  Rng rng(seed);
  std::vector<Viewpoint> views;
  views.reserve(static_cast<std::size_t>(n));
  const long max_attempts = 1000L + 200L * n;
  long attempts = 0;
  while (static_cast<int>(views.size()) < n && attempts < max_attempts) {
    ++attempts;
    const double z = rng.uniform();  // cos(polar) uniform => uniform area
    const double phi = 2.0 * M_PI * rng.uniform();
    const double r_xy = std::sqrt(std::max(0.0, 1.0 - z * z));
    const geom::Vec3 pos =
        centroid + radius * geom::Vec3(r_xy * std::cos(phi),
                                       r_xy * std::sin(phi), z);
    if (!workspace.contains(pos)) continue;
    views.push_back({pos, view_orientation(pos, centroid)});
  }
  if (static_cast<int>(views.size()) < n) {
    throw std::runtime_error(
        "sample_viewpoints: workspace excludes the view hemisphere");
  }
  return views;
}

std::vector<geom::Vec3> sensor_rays(const SensorModel& sensor) {
  if (sensor.ray_cols < 1 || sensor.ray_rows < 1 ||
      sensor.hfov_deg <= 0.0 || sensor.hfov_deg >= 180.0 ||
      sensor.vfov_deg <= 0.0 || sensor.vfov_deg >= 180.0) {
    throw std::invalid_argument("SensorModel: invalid field of view or rays");
  }
  const double tan_h = std::tan(0.5 * sensor.hfov_deg * M_PI / 180.0);
  const double tan_v = std::tan(0.5 * sensor.vfov_deg * M_PI / 180.0);
  std::vector<geom::Vec3> dirs;
  dirs.reserve(static_cast<std::size_t>(sensor.ray_cols) * sensor.ray_rows);
  for (int r = 0; r < sensor.ray_rows; ++r) {
    for (int c = 0; c < sensor.ray_cols; ++c) {
      const double u = (2.0 * (c + 0.5) / sensor.ray_cols - 1.0) * tan_h;
      const double v = (2.0 * (r + 0.5) / sensor.ray_rows - 1.0) * tan_v;
      dirs.push_back(geom::Vec3(u, v, 1.0).normalized());
    }
  }
  return dirs;
}

double expected_info_gain(const OccupancyGrid& grid, const Viewpoint& view,
                          const SensorModel& sensor) {
  std::vector<std::uint8_t> flags(grid.cell_count(), kUntouched);
  for (const geom::Vec3& cam_dir : sensor_rays(sensor)) {
    const geom::Vec3 dir = view.orientation.rotate(cam_dir);
    const geom::Vec3 end = view.position + sensor.d_ray * dir;
    traverse_segment(grid, view.position, end, [&](int idx) {
      if (grid.logodds[idx] > 0.0) {
        flags[idx] = kHit;  // predicted hit terminates the ray
        return false;
      }
      flags[idx] = std::max<std::uint8_t>(flags[idx], kMiss);
      return true;
    });
  }
  const double l_hit = logodds_hit();
  const double l_miss = logodds_miss();
  double gain = 0.0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (flags[i] == kUntouched) continue;
    const double l0 = grid.logodds[i];
    const double l1 = clamp_logodds(l0 + (flags[i] == kHit ? l_hit : l_miss));
    gain += cell_entropy_bits(l0) - cell_entropy_bits(l1);
  }
  return gain;
}

NbvSelection select_nbv(const OccupancyGrid& grid,
                        const std::vector<Viewpoint>& candidates,
                        const SensorModel& sensor) {
  if (candidates.empty()) {
    throw std::invalid_argument("select_nbv: no candidates");
  }
  NbvSelection best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const double gain = expected_info_gain(grid, candidates[i], sensor);
    if (best.index < 0 || gain > best.gain) {
      best.view = candidates[i];
      best.index = static_cast<int>(i);
      best.gain = gain;
    }
  }
  return best;
}

}  // namespace avtp::view
