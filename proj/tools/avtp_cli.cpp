// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end over the avtp C API.
//
//   avtp run --scene scenes/clutter5.toml --pipeline full --seed 7 --out out/
//   avtp report --out out/report out/full_seed7/record.json ...
//   avtp render-scene --scene gen:3 --out out/render
//   avtp validate-config --scene scenes/clutter5.toml
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avtp.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(avtp_status status) {
  switch (status) {
    case AVTP_OK:
      return kExitOk;
    case AVTP_ERROR_CONFIG:
    case AVTP_ERROR_INVALID_ARGUMENT:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

int fail(avtp_status status) {
  std::fprintf(stderr, "error (%s): %s\n", avtp_status_name(status),
               avtp_last_error());
  return exit_code_for(status);
}

struct ScopedScene {
  avtp_scene* scene = nullptr;
  ~ScopedScene() { avtp_scene_close(scene); }
};

struct ScopedString {
  char* s = nullptr;
  ~ScopedString() { avtp_string_free(s); }
};

int cmd_run(const std::string& scene_spec, const std::string& pipeline,
            const std::vector<std::uint64_t>& seeds,
            const std::vector<std::string>& params, const std::string& out) {
  ScopedScene scene;
  if (avtp_status st = avtp_scene_open(scene_spec.c_str(), &scene.scene)) {
    return fail(st);
  }
  std::vector<const char*> param_ptrs;
  param_ptrs.reserve(params.size());
  for (const std::string& p : params) param_ptrs.push_back(p.c_str());

  for (std::uint64_t seed : seeds) {
    avtp_run* run = nullptr;
    const avtp_status st = avtp_run_pipeline(
        scene.scene, pipeline.c_str(), seed,
        param_ptrs.empty() ? nullptr : param_ptrs.data(), param_ptrs.size(),
        out.empty() ? nullptr : out.c_str(), &run);
    if (st != AVTP_OK) return fail(st);
    if (avtp_run_failed(run)) {
      std::fprintf(stderr, "run failed (%s seed %llu): %s\n",
                   pipeline.c_str(), static_cast<unsigned long long>(seed),
                   avtp_run_failure_message(run));
      avtp_run_free(run);
      return kExitRuntime;
    }
    ScopedString csv;
    avtp_run_metrics_csv(run, &csv.s);
    std::printf("%s seed %llu:\n%s", pipeline.c_str(),
                static_cast<unsigned long long>(seed), csv.s ? csv.s : "");
    avtp_run_free(run);
  }
  if (!out.empty()) {
    std::printf("run directories written under %s\n", out.c_str());
  }
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& records,
               const std::string& out) {
  std::vector<const char*> ptrs;
  ptrs.reserve(records.size());
  for (const std::string& r : records) ptrs.push_back(r.c_str());
  if (avtp_status st = avtp_report(ptrs.data(), ptrs.size(), out.c_str())) {
    return fail(st);
  }
  std::printf("wrote %s/summary.csv, series.csv, series.svg\n", out.c_str());
  return kExitOk;
}

int cmd_render(const std::string& scene_spec, std::uint64_t seed,
               const std::string& out) {
  ScopedScene scene;
  if (avtp_status st = avtp_scene_open(scene_spec.c_str(), &scene.scene)) {
    return fail(st);
  }
  if (avtp_status st = avtp_scene_render(scene.scene, seed, out.c_str())) {
    return fail(st);
  }
  std::printf("wrote %s/cloud.xyz, ids.pgm, render.json (%zu objects)\n",
              out.c_str(), avtp_scene_object_count(scene.scene));
  return kExitOk;
}

int cmd_validate(const std::string& scene_spec) {
  ScopedString summary;
  if (avtp_status st = avtp_validate_config(scene_spec.c_str(), &summary.s)) {
    return fail(st);
  }
  std::printf("%s\nconfig ok\n", summary.s ? summary.s : "");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"active visuo-tactile pose estimation simulator"};
  app.require_subcommand(1);

  std::string scene_spec;
  std::string pipeline = "full";
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::string> params;
  std::string out_dir;
  std::vector<std::string> record_files;
  std::uint64_t render_seed = 1;

  CLI::App* run = app.add_subcommand("run", "run a pipeline on a scene");
  run->add_option("--scene", scene_spec,
                  "scene file or gen:<seed>[:degraded]")
      ->required();
  run->add_option("--pipeline", pipeline,
                  "static | active-vision | declutter+active-vision | full");
  run->add_option("--seed,--seeds", seeds, "seeds to run");
  run->add_option("--param", params, "key=value parameter override");
  run->add_option("--out", out_dir, "output directory for run records");

  CLI::App* report = app.add_subcommand("report", "aggregate run records");
  report->add_option("--out", out_dir, "report output directory")->required();
  report->add_option("records", record_files, "record.json files")
      ->required()
      ->expected(-1);

  CLI::App* render = app.add_subcommand("render-scene",
                                        "render a scene to cloud + id mask");
  render->add_option("--scene", scene_spec, "scene file or gen:<seed>")
      ->required();
  render->add_option("--seed", render_seed, "render seed");
  render->add_option("--out", out_dir, "output directory")->required();

  CLI::App* validate =
      app.add_subcommand("validate-config", "parse and validate a scene");
  validate->add_option("--scene", scene_spec, "scene file or gen:<seed>")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (run->parsed()) return cmd_run(scene_spec, pipeline, seeds, params, out_dir);
  if (report->parsed()) return cmd_report(record_files, out_dir);
  if (render->parsed()) return cmd_render(scene_spec, render_seed, out_dir);
  if (validate->parsed()) return cmd_validate(scene_spec);
  return kExitConfig;
}
