// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "core/registration.hpp"
#include "core/sim.hpp"
#include "core/touch_planner.hpp"
#include "core/view_planner.hpp"

namespace avtp::pipeline {

enum class Pipeline {
  kStatic,
  kActiveVision,
  kDeclutterActiveVision,
  kFull,
};

Pipeline parse_pipeline(const std::string& name);  // ConfigError on unknown
std::string pipeline_name(Pipeline p);

struct Params {
  reg::Params tiqf;
  view::SensorModel camera{60.0, 45.0, 160, 120, 1.5};   // depth + id renders
  view::SensorModel nbv_rays{60.0, 45.0, 64, 48, 1.5};   // info-gain fan
  double grid_resolution = 0.005;
  double grid_margin = 0.15;
  int nbv_candidates = 32;
  double hemisphere_radius = 0.5;
  int view_budget = 5;
  int touch_budget = 10;
  int bootstrap_touches = 3;
  touch::StopCriterion stop;
  int nbt_per_face = 20;
  double nbt_standoff = 0.05;
  double push_distance = 0.05;
  double gripper_length = 0.03;  // meters, projected to pixels at plan time
  int push_samples = 32;
  int max_declutter_actions = 12;
  double mu_o = 0.05;
  double mu_d = 0.5;
  double mu_q = 0.1;
  int metrics_model_samples = 500;
  double declutter_view_height = 0.8;
  double static_view_azimuth_deg = 45.0;
  double static_view_elevation_deg = 50.0;
  bool dump_grid = false;

  // Applies a "key=value" override; ConfigError on unknown keys or bad
  // values. Keys are documented in the README.
  void apply_override(const std::string& key, const std::string& value);

  nlohmann::json to_json() const;
};

struct StageMetrics {
  std::string stage;
  sim::MetricsReport metrics;
};

struct RunRecord {
  std::string pipeline;
  std::uint64_t seed = 0;
  std::string scene_label;
  std::vector<StageMetrics> stages;
  nlohmann::json actions = nlohmann::json::array();
  int declutter_actions = 0;
  int views_used = 0;
  int touches_used = 0;
  double wall_time_ms = 0.0;
  bool failed = false;
  std::string failure;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

// Runs one pipeline on a copy of the scene. When out_dir is non-empty a
// run directory (config snapshot, record JSON, metrics CSV, DOT graphs,
// optional grid dump) is written beneath it.
RunRecord run_pipeline(const sim::Scene& scene, Pipeline pipeline,
                       std::uint64_t seed, const Params& params,
                       const std::string& out_dir = "",
                       const std::string& scene_label = "scene");

// Scene spec: either a scene file path or "gen:<seed>[:degraded]" for a
// procedurally generated clutter scene.
sim::Scene load_scene_spec(const std::string& spec);

// metrics.csv content for one record (also embedded in the run directory).
std::string metrics_csv(const RunRecord& record);

// Aggregates records: summary.csv (per-pipeline mean/median +- deviation of
// the final-stage errors), series.csv (per-stage series) and series.svg.
void write_report(const std::vector<RunRecord>& records,
                  const std::string& out_dir);
void write_report_from_files(const std::vector<std::string>& record_paths,
                             const std::string& out_dir);

}  // namespace avtp::pipeline
