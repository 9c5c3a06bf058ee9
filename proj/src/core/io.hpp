// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "core/declutter.hpp"
#include "core/geometry.hpp"
#include "core/registration.hpp"
#include "core/view_planner.hpp"

namespace avtp::io {

// Whitespace-separated XYZ text, one point per line, meters.
geom::PointCloud load_xyz(const std::string& path);
void save_xyz(const geom::PointCloud& cloud, const std::string& path);

// Label masks as ASCII PGM (P2, labels as gray values) or as JSON
// row-major id run-length ({"width", "height", "runs": [[id, count], ...]}).
declutter::SegMask load_mask_pgm(const std::string& path);
void save_mask_pgm(const declutter::SegMask& mask, const std::string& path);
declutter::SegMask load_mask_json(const std::string& path);

// Grid dump: origin, resolution, dims and the per-cell probability array.
nlohmann::json grid_to_json(const view::OccupancyGrid& grid);

// Declutter tree in DOT form; edges carry weight and action labels.
std::string graph_to_dot(const declutter::DeclutterGraph& graph);

nlohmann::json pose_to_json(const geom::Pose& pose);
geom::Pose pose_from_json(const nlohmann::json& j);

// Registration report: pose, covariance trace, iterations, convergence flag.
nlohmann::json registration_report(const reg::Result& result);

// Locale-independent shortest-ish representation used in CSV output.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Minimal SVG line chart; one polyline per series over step indices.
struct Series {
  std::string label;
  std::vector<double> values;
};
std::string render_series_svg(const std::vector<Series>& series,
                              const std::string& title,
                              const std::string& y_label);

}  // namespace avtp::io
