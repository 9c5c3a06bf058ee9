// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "core/error.hpp"

namespace avtp::io {

geom::PointCloud load_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open point cloud file: " + path);
  geom::PointCloud cloud;
  double x, y, z;
  while (in >> x >> y >> z) {
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
      throw ConfigError("point cloud has non-finite coordinates: " + path);
    }
    cloud.points.emplace_back(x, y, z);
  }
  if (!in.eof()) {
    throw ConfigError("malformed point cloud file: " + path);
  }
  return cloud;
}

void save_xyz(const geom::PointCloud& cloud, const std::string& path) {
  std::ostringstream out;
  for (const geom::Vec3& p : cloud.points) {
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' '
        << format_double(p.z()) << '\n';
  }
  write_text_file(path, out.str());
}

declutter::SegMask load_mask_pgm(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mask file: " + path);
  std::string magic;
  in >> magic;
  if (magic != "P2") {
    throw ConfigError("mask must be ASCII PGM (P2): " + path);
  }
  // Skip comment lines between tokens.
  const auto next_int = [&]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return std::stoi(tok);
    }
    throw ConfigError("truncated PGM mask: " + path);
  };
  declutter::SegMask mask;
  mask.width = next_int();
  mask.height = next_int();
  next_int();  // maxval, unused (labels are ids)
  if (mask.width < 1 || mask.height < 1) {
    throw ConfigError("PGM mask has invalid dimensions: " + path);
  }
  const std::size_t n = static_cast<std::size_t>(mask.width) * mask.height;
  mask.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) mask.labels.push_back(next_int());
  return mask;
}

void save_mask_pgm(const declutter::SegMask& mask, const std::string& path) {
  std::ostringstream out;
  const int maxval =
      std::max(1, *std::max_element(mask.labels.begin(), mask.labels.end()));
  out << "P2\n" << mask.width << ' ' << mask.height << '\n' << maxval << '\n';
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      out << mask.at(x, y) << (x + 1 == mask.width ? '\n' : ' ');
    }
  }
  write_text_file(path, out.str());
}

declutter::SegMask load_mask_json(const std::string& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed JSON mask: " + std::string(e.what()));
  }
  declutter::SegMask mask;
  mask.width = j.at("width").get<int>();
  mask.height = j.at("height").get<int>();
  const std::size_t n = static_cast<std::size_t>(mask.width) * mask.height;
  for (const auto& run : j.at("runs")) {
    const int id = run.at(0).get<int>();
    const int count = run.at(1).get<int>();
    for (int i = 0; i < count; ++i) mask.labels.push_back(id);
  }
  if (mask.labels.size() != n) {
    throw ConfigError("JSON mask runs do not cover width*height pixels");
  }
  return mask;
}

nlohmann::json grid_to_json(const view::OccupancyGrid& grid) {
  nlohmann::json j;
  j["origin"] = {grid.origin.x(), grid.origin.y(), grid.origin.z()};
  j["resolution"] = grid.resolution;
  j["dims"] = {grid.dims.x(), grid.dims.y(), grid.dims.z()};
  std::vector<double> probs(grid.cell_count());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = grid.probability(i);
  j["probability"] = probs;
  return j;
}

std::string graph_to_dot(const declutter::DeclutterGraph& graph) {
  std::ostringstream out;
  out << "digraph declutter {\n";
  for (const auto& [id, det] : graph.vertices) {
    (void)det;
    out << "  \"" << id << "\"";
    if (id == graph.root) out << " [shape=doublecircle, label=\"" << id << " (target)\"]";
    out << ";\n";
  }
  for (const auto& [child, edge] : graph.incoming) {
    out << "  \"" << edge.parent << "\" -> \"" << child << "\" [label=\"w="
        << format_double(edge.weight);
    if (edge.action_set) {
      out << (edge.action == declutter::Action::kGrasp ? ", grasp" : ", push");
    }
    out << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

nlohmann::json pose_to_json(const geom::Pose& pose) {
  return {{"quaternion_wxyz",
           {pose.rotation.w, pose.rotation.x, pose.rotation.y,
            pose.rotation.z}},
          {"translation",
           {pose.translation.x(), pose.translation.y(),
            pose.translation.z()}}};
}

geom::Pose pose_from_json(const nlohmann::json& j) {
  const auto& q = j.at("quaternion_wxyz");
  const auto& t = j.at("translation");
  return geom::Pose{
      geom::Quat{q.at(0).get<double>(), q.at(1).get<double>(),
                 q.at(2).get<double>(), q.at(3).get<double>()}
          .normalized(),
      geom::Vec3(t.at(0).get<double>(), t.at(1).get<double>(),
                 t.at(2).get<double>())};
}

nlohmann::json registration_report(const reg::Result& result) {
  nlohmann::json j;
  j["pose"] = pose_to_json(result.pose);
  j["covariance_trace"] = result.state.covariance.trace();
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["skipped_updates"] = result.skipped_updates;
  return j;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write file: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

std::string render_series_svg(const std::vector<Series>& series,
                              const std::string& title,
                              const std::string& y_label) {
  const int width = 640, height = 400;
  const int ml = 60, mr = 140, mt = 40, mb = 40;
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b"};
  double y_max = 1e-9;
  std::size_t x_max = 1;
  for (const Series& s : series) {
    x_max = std::max(x_max, s.values.size());
    for (double v : s.values) y_max = std::max(y_max, v);
  }
  const double plot_w = width - ml - mr;
  const double plot_h = height - mt - mb;
  const auto sx = [&](double step) {
    return ml + (x_max <= 1 ? 0.0 : plot_w * step / (x_max - 1));
  };
  const auto sy = [&](double v) { return mt + plot_h * (1.0 - v / y_max); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"14\">" << title
      << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + plot_h << "\" x2=\""
      << ml + plot_w << "\" y2=\"" << mt + plot_h
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << mt + plot_h << "\" stroke=\"black\"/>\n";
  out << "<text x=\"15\" y=\"" << mt + plot_h / 2
      << "\" font-family=\"sans-serif\" font-size=\"11\" "
      << "transform=\"rotate(-90 15 " << mt + plot_h / 2 << ")\" "
      << "text-anchor=\"middle\">" << y_label << "</text>\n";
  out << "<text x=\"" << ml + plot_w / 2 << "\" y=\"" << height - 10
      << "\" font-family=\"sans-serif\" font-size=\"11\" "
      << "text-anchor=\"middle\">step</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    if (sr.values.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << colors[s % 6]
        << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < sr.values.size(); ++i) {
      out << sx(static_cast<double>(i)) << ',' << sy(sr.values[i]) << ' ';
    }
    out << "\"/>\n";
    const double ly = mt + 16.0 * static_cast<double>(s);
    out << "<rect x=\"" << ml + plot_w + 10 << "\" y=\"" << ly
        << "\" width=\"12\" height=\"4\" fill=\"" << colors[s % 6]
        << "\"/>\n";
    out << "<text x=\"" << ml + plot_w + 28 << "\" y=\"" << ly + 6
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << sr.label
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace avtp::io
