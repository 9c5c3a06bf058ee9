// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Geometry>

#include "core/geometry.hpp"

namespace avtp::view {

// Dense log-odds occupancy grid over the target region. Log-odds are
// natural-log and clamped to +-3.5 (p in [0.029, 0.971]); unobserved cells
// sit at 0 (p = 0.5). Cells are indexed x-fastest.
struct OccupancyGrid {
  geom::Vec3 origin = geom::Vec3::Zero();
  double resolution = 0.005;
  Eigen::Vector3i dims = Eigen::Vector3i::Zero();
  std::vector<double> logodds;

  static constexpr double kClamp = 3.5;

  static OccupancyGrid create(const geom::Vec3& origin, double resolution,
                              const Eigen::Vector3i& dims);
  // Cube of half-extent `margin` centered on `center`.
  static OccupancyGrid around(const geom::Vec3& center, double margin,
                              double resolution);

  std::size_t cell_count() const { return logodds.size(); }
  int index(int ix, int iy, int iz) const {
    return ix + dims.x() * (iy + dims.y() * iz);
  }
  bool contains(const geom::Vec3& p) const;
  Eigen::Vector3i cell_of(const geom::Vec3& p) const;
  geom::Vec3 cell_center(const Eigen::Vector3i& c) const;
  double probability(std::size_t idx) const {
    return 1.0 / (1.0 + std::exp(-logodds[idx]));
  }
};

// Log-odds increments for the fixed hit/miss probabilities 0.7 / 0.4.
double logodds_hit();   // ln(0.7/0.3)
double logodds_miss();  // ln(0.4/0.6)

// Pinhole-style ray fan: ray_cols x ray_rows rays over hfov x vfov, cast to
// at most d_ray meters along the camera +Z.
struct SensorModel {
  double hfov_deg = 60.0;
  double vfov_deg = 45.0;
  int ray_cols = 64;
  int ray_rows = 48;
  double d_ray = 1.5;
};

// Camera placement; boresight is orientation * (0,0,1) and passes through
// the centroid the viewpoint was built for.
struct Viewpoint {
  geom::Vec3 position = geom::Vec3::Zero();
  geom::Quat orientation = geom::Quat::identity();

  geom::Vec3 boresight() const {
    return orientation.rotate(geom::Vec3::UnitZ());
  }
};

// Camera-frame ray directions of the sensor fan, row-major over (row, col).
std::vector<geom::Vec3> sensor_rays(const SensorModel& sensor);

// Sum of per-cell Shannon entropies, in bits.
double grid_entropy(const OccupancyGrid& grid);

// Exact voxel stepping along the segment [a, b] clipped to the grid volume.
// Visits cells in order; the callback returns false to stop early.
void traverse_segment(const OccupancyGrid& grid, const geom::Vec3& a,
                      const geom::Vec3& b,
                      const std::function<bool(int)>& visit);

// Integrates one measurement batch: cells traversed on the way to each hit
// receive the miss update, the cell containing the hit receives the hit
// update. Each cell is updated at most once per batch, hit beating miss.
// Rays are clipped to the grid volume, so sensor origins outside the grid
// are fine; hits outside the grid truncate at the boundary (miss-only ray).
void integrate_measurement(OccupancyGrid& grid, const geom::Vec3& sensor_origin,
                           const geom::PointCloud& hits);

// Orientation whose boresight looks from p_view at the centroid. The
// rotation axis comes from h x Z with h the unit centroid-to-view offset;
// when h is parallel to Z the axis convention is (1,0,0).
geom::Quat view_orientation(const geom::Vec3& p_view,
                            const geom::Vec3& centroid);

// n viewpoints uniform on the upper hemisphere of the given radius above
// the centroid, rejection-resampled into the workspace box.
std::vector<Viewpoint> sample_viewpoints(const geom::Vec3& centroid,
                                         double radius, int n,
                                         std::uint64_t seed,
                                         const Eigen::AlignedBox3d& workspace);

// Expected entropy reduction from a viewpoint: the sensor's ray fan is
// traversed through the grid (a ray terminates in the first cell with
// p > 0.5, otherwise travels d_ray), the resulting predicted batch is
// integrated on scratch state, and the per-cell entropy drop is summed.
// The grid itself is not mutated.
double expected_info_gain(const OccupancyGrid& grid, const Viewpoint& view,
                          const SensorModel& sensor);

struct NbvSelection {
  Viewpoint view;
  int index = -1;
  double gain = 0.0;
};

// Argmax of expected_info_gain over the candidates; ties break toward the
// lowest index.
NbvSelection select_nbv(const OccupancyGrid& grid,
                        const std::vector<Viewpoint>& candidates,
                        const SensorModel& sensor);

}  // namespace avtp::view
