// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "avtp.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include <json.hpp>

#include "core/error.hpp"
#include "core/io.hpp"
#include "core/pipeline.hpp"
#include "core/rng.hpp"
#include "core/sim.hpp"

struct avtp_scene {
  avtp::sim::Scene scene;
  std::string label;
};

struct avtp_run {
  avtp::pipeline::RunRecord record;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Maps the C++ error idiom onto status codes and stores the message.
template <typename Fn>
avtp_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return AVTP_OK;
  } catch (const avtp::ConfigError& e) {
    g_last_error = e.what();
    return AVTP_ERROR_CONFIG;
  } catch (const avtp::IoError& e) {
    g_last_error = e.what();
    return AVTP_ERROR_IO;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return AVTP_ERROR_INVALID_ARGUMENT;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return AVTP_ERROR_RUNTIME;
  }
}

avtp_status require(bool ok, const char* message) {
  if (ok) return AVTP_OK;
  g_last_error = message;
  return AVTP_ERROR_INVALID_ARGUMENT;
}

}  // namespace

extern "C" {

const char* avtp_version(void) { return "0.1.0"; }

const char* avtp_status_name(avtp_status status) {
  switch (status) {
    case AVTP_OK:
      return "AVTP_OK";
    case AVTP_ERROR_INVALID_ARGUMENT:
      return "AVTP_ERROR_INVALID_ARGUMENT";
    case AVTP_ERROR_CONFIG:
      return "AVTP_ERROR_CONFIG";
    case AVTP_ERROR_IO:
      return "AVTP_ERROR_IO";
    case AVTP_ERROR_RUNTIME:
      return "AVTP_ERROR_RUNTIME";
  }
  return "AVTP_ERROR_UNKNOWN";
}

const char* avtp_last_error(void) { return g_last_error.c_str(); }

void avtp_string_free(char* s) { delete[] s; }

avtp_status avtp_scene_open(const char* scene_spec, avtp_scene** out_scene) {
  if (avtp_status st = require(scene_spec && out_scene,
                               "avtp_scene_open: NULL argument")) {
    return st;
  }
  *out_scene = nullptr;
  return guarded([&] {
    auto scene = std::make_unique<avtp_scene>();
    scene->scene = avtp::pipeline::load_scene_spec(scene_spec);
    scene->label = scene_spec;
    *out_scene = scene.release();
  });
}

void avtp_scene_close(avtp_scene* scene) { delete scene; }

size_t avtp_scene_object_count(const avtp_scene* scene) {
  return scene ? scene->scene.objects.size() : 0;
}

avtp_status avtp_validate_config(const char* scene_spec,
                                 char** out_summary_json) {
  if (avtp_status st =
          require(scene_spec, "avtp_validate_config: NULL scene_spec")) {
    return st;
  }
  return guarded([&] {
    const avtp::sim::Scene scene = avtp::pipeline::load_scene_spec(scene_spec);
    if (out_summary_json) {
      nlohmann::json j;
      j["scene"] = scene_spec;
      j["objects"] = nlohmann::json::array();
      for (const auto& obj : scene.objects) {
        j["objects"].push_back({{"id", obj.id},
                                {"mesh", obj.mesh_path},
                                {"is_target", obj.is_target},
                                {"faces", obj.mesh.faces().size()},
                                {"grasp_quality", obj.base_grasp_quality}});
      }
      j["table_height"] = scene.table_height;
      j["noise"] = {{"depth_sigma", scene.noise.depth_sigma},
                    {"touch_sigma", scene.noise.touch_sigma}};
      j["degraded_depth_target"] = scene.degraded_depth_target;
      *out_summary_json = dup_string(j.dump(2));
    }
  });
}

avtp_status avtp_scene_render(const avtp_scene* scene, uint64_t seed,
                              const char* out_dir) {
  if (avtp_status st = require(scene && out_dir,
                               "avtp_scene_render: NULL argument")) {
    return st;
  }
  return guarded([&] {
    namespace geom = avtp::geom;
    std::filesystem::create_directories(out_dir);
    const auto& ws = scene->scene.workspace;
    const geom::Vec3 center(0.5 * (ws.min().x() + ws.max().x()),
                            0.5 * (ws.min().y() + ws.max().y()),
                            scene->scene.table_height);
    const geom::Vec3 pos = center + geom::Vec3(0.25, 0.25, 0.4);
    const avtp::view::Viewpoint view{pos,
                                     avtp::view::view_orientation(pos, center)};
    avtp::view::SensorModel sensor;
    sensor.ray_cols = 160;
    sensor.ray_rows = 120;
    const auto render = avtp::sim::render_depth(
        scene->scene, view, sensor, scene->scene.noise, seed);
    const std::string dir(out_dir);
    avtp::io::save_xyz(render.cloud(), dir + "/cloud.xyz");
    avtp::io::save_mask_pgm(render.mask(), dir + "/ids.pgm");
    nlohmann::json j;
    j["position"] = {view.position.x(), view.position.y(), view.position.z()};
    j["orientation_wxyz"] = {view.orientation.w, view.orientation.x,
                             view.orientation.y, view.orientation.z};
    j["cols"] = sensor.ray_cols;
    j["rows"] = sensor.ray_rows;
    j["seed"] = seed;
    avtp::io::write_text_file(dir + "/render.json", j.dump(2));
  });
}

avtp_status avtp_run_pipeline(const avtp_scene* scene, const char* pipeline,
                              uint64_t seed, const char* const* params,
                              size_t num_params, const char* out_dir,
                              avtp_run** out_run) {
  if (avtp_status st = require(scene && pipeline && out_run,
                               "avtp_run_pipeline: NULL argument")) {
    return st;
  }
  *out_run = nullptr;
  return guarded([&] {
    avtp::pipeline::Params p;
    for (size_t i = 0; i < num_params; ++i) {
      const std::string kv = params[i] ? params[i] : "";
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw avtp::ConfigError("param override must be key=value: " + kv);
      }
      p.apply_override(kv.substr(0, eq), kv.substr(eq + 1));
    }
    const avtp::pipeline::Pipeline pl = avtp::pipeline::parse_pipeline(pipeline);
    auto run = std::make_unique<avtp_run>();
    run->record = avtp::pipeline::run_pipeline(
        scene->scene, pl, seed, p, out_dir ? out_dir : "", scene->label);
    *out_run = run.release();
  });
}

avtp_status avtp_run_record_json(const avtp_run* run, char** out_json) {
  if (avtp_status st = require(run && out_json,
                               "avtp_run_record_json: NULL argument")) {
    return st;
  }
  return guarded([&] { *out_json = dup_string(run->record.to_json().dump(2)); });
}

avtp_status avtp_run_metrics_csv(const avtp_run* run, char** out_csv) {
  if (avtp_status st = require(run && out_csv,
                               "avtp_run_metrics_csv: NULL argument")) {
    return st;
  }
  return guarded(
      [&] { *out_csv = dup_string(avtp::pipeline::metrics_csv(run->record)); });
}

int avtp_run_failed(const avtp_run* run) {
  return run && run->record.failed ? 1 : 0;
}

const char* avtp_run_failure_message(const avtp_run* run) {
  return run ? run->record.failure.c_str() : "";
}

void avtp_run_free(avtp_run* run) { delete run; }

avtp_status avtp_report(const char* const* record_files, size_t num_files,
                        const char* out_dir) {
  if (avtp_status st = require(record_files && out_dir && num_files > 0,
                               "avtp_report: NULL argument or empty list")) {
    return st;
  }
  return guarded([&] {
    std::vector<std::string> paths;
    paths.reserve(num_files);
    for (size_t i = 0; i < num_files; ++i) {
      if (!record_files[i]) {
        throw std::invalid_argument("avtp_report: NULL record path");
      }
      paths.emplace_back(record_files[i]);
    }
    avtp::pipeline::write_report_from_files(paths, out_dir);
  });
}

}  // extern "C"
