// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/geometry.hpp"

namespace avtp::sim {

// Procedural solids for generated scenes and tests. All sit with their base
// on z = 0 and their footprint centroid on the z axis.

geom::TriangleMesh make_box_mesh(double sx, double sy, double sz);

geom::TriangleMesh make_cylinder_mesh(double radius, double height,
                                      int segments = 16);

// Asymmetric L-shaped prism; the default target. leg_x/leg_y are the outer
// leg lengths, thickness the leg width.
geom::TriangleMesh make_lshape_mesh(double leg_x = 0.09, double leg_y = 0.07,
                                    double thickness = 0.03,
                                    double height = 0.04);

// Right-triangular prism.
geom::TriangleMesh make_wedge_mesh(double w, double d, double h);

}  // namespace avtp::sim
