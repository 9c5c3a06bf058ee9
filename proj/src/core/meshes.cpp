// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/meshes.hpp"

#include <cmath>
#include <stdexcept>

namespace avtp::sim {

namespace {

using geom::Vec3;

// Extrudes a simple (possibly concave) footprint polygon with a given
// fan-style triangulation of the top/bottom caps.
geom::TriangleMesh extrude(const std::vector<Eigen::Vector2d>& footprint,
                           const std::vector<std::array<int, 3>>& cap_tris,
                           double height) {
  const int n = static_cast<int>(footprint.size());
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  {
    double area = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& p = footprint[i];
      const auto& q = footprint[(i + 1) % n];
      const double cross = p.x() * q.y() - q.x() * p.y();
      area += cross;
      centroid += (p + q) * cross;
    }
    centroid /= 3.0 * area;
  }
  std::vector<Vec3> vertices;
  vertices.reserve(2 * n);
  for (const auto& p : footprint) {
    vertices.emplace_back(p.x() - centroid.x(), p.y() - centroid.y(), 0.0);
  }
  for (const auto& p : footprint) {
    vertices.emplace_back(p.x() - centroid.x(), p.y() - centroid.y(), height);
  }
  std::vector<std::array<int, 3>> faces;
  for (const auto& t : cap_tris) {
    faces.push_back({t[0], t[2], t[1]});                  // bottom, downward
    faces.push_back({t[0] + n, t[1] + n, t[2] + n});      // top, upward
  }
  for (int i = 0; i < n; ++i) {
    const int j = (i + 1) % n;
    faces.push_back({i, j, j + n});
    faces.push_back({i, j + n, i + n});
  }
  return geom::TriangleMesh::create(std::move(vertices), std::move(faces));
}

}  // namespace

geom::TriangleMesh make_box_mesh(double sx, double sy, double sz) {
  if (sx <= 0.0 || sy <= 0.0 || sz <= 0.0) {
    throw std::invalid_argument("make_box_mesh: non-positive extent");
  }
  const double hx = 0.5 * sx;
  const double hy = 0.5 * sy;
  return extrude({{-hx, -hy}, {hx, -hy}, {hx, hy}, {-hx, hy}},
                 {{{0, 1, 2}}, {{0, 2, 3}}}, sz);
}

geom::TriangleMesh make_cylinder_mesh(double radius, double height,
                                      int segments) {
  if (radius <= 0.0 || height <= 0.0 || segments < 3) {
    throw std::invalid_argument("make_cylinder_mesh: invalid parameters");
  }
  std::vector<Eigen::Vector2d> ring;
  std::vector<std::array<int, 3>> caps;
  ring.reserve(segments);
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * M_PI * i / segments;
    ring.emplace_back(radius * std::cos(a), radius * std::sin(a));
  }
  for (int i = 1; i + 1 < segments; ++i) caps.push_back({0, i, i + 1});
  return extrude(ring, caps, height);
}

geom::TriangleMesh make_lshape_mesh(double leg_x, double leg_y,
                                    double thickness, double height) {
  if (leg_x <= thickness || leg_y <= thickness || thickness <= 0.0 ||
      height <= 0.0) {
    throw std::invalid_argument("make_lshape_mesh: invalid parameters");
  }
  const double t = thickness;
  return extrude({{0, 0}, {leg_x, 0}, {leg_x, t}, {t, t}, {t, leg_y}, {0, leg_y}},
                 {{{0, 1, 2}}, {{0, 2, 3}}, {{0, 3, 4}}, {{0, 4, 5}}}, height);
}

geom::TriangleMesh make_wedge_mesh(double w, double d, double h) {
  if (w <= 0.0 || d <= 0.0 || h <= 0.0) {
    throw std::invalid_argument("make_wedge_mesh: invalid parameters");
  }
  return extrude({{0, 0}, {w, 0}, {0, d}}, {{{0, 1, 2}}}, h);
}

}  // namespace avtp::sim
