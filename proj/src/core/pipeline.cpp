// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <stdexcept>

#include "core/error.hpp"
#include "core/io.hpp"
#include "core/rng.hpp"

namespace avtp::pipeline {

namespace fs = std::filesystem;

Pipeline parse_pipeline(const std::string& name) {
  if (name == "static") return Pipeline::kStatic;
  if (name == "active-vision") return Pipeline::kActiveVision;
  if (name == "declutter+active-vision") return Pipeline::kDeclutterActiveVision;
  if (name == "full") return Pipeline::kFull;
  throw ConfigError("unknown pipeline '" + name +
                    "' (expected static, active-vision, "
                    "declutter+active-vision or full)");
}

std::string pipeline_name(Pipeline p) {
  switch (p) {
    case Pipeline::kStatic:
      return "static";
    case Pipeline::kActiveVision:
      return "active-vision";
    case Pipeline::kDeclutterActiveVision:
      return "declutter+active-vision";
    case Pipeline::kFull:
      return "full";
  }
  return "?";
}

void Params::apply_override(const std::string& key, const std::string& value) {
  const auto as_double = [&]() {
    try {
      std::size_t used = 0;
      const double v = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument("");
      return v;
    } catch (const std::exception&) {
      throw ConfigError("param '" + key + "': not a number: " + value);
    }
  };
  const auto as_int = [&]() { return static_cast<int>(as_double()); };
  const auto as_bool = [&]() {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("param '" + key + "': not a bool: " + value);
  };

  if (key == "tiqf.rho") {
    tiqf.rho = as_double();
  } else if (key == "tiqf.max_iterations") {
    tiqf.max_iterations = as_int();
  } else if (key == "tiqf.conv_trans") {
    tiqf.conv_trans = as_double();
  } else if (key == "tiqf.conv_rot_deg") {
    tiqf.conv_rot_deg = as_double();
  } else if (key == "tiqf.max_pairs") {
    tiqf.max_pairs_per_iter = as_int();
  } else if (key == "tiqf.init_covariance") {
    tiqf.init_covariance_scale = as_double();
  } else if (key == "tiqf.model_samples") {
    tiqf.model_samples = as_int();
  } else if (key == "camera.cols") {
    camera.ray_cols = as_int();
  } else if (key == "camera.rows") {
    camera.ray_rows = as_int();
  } else if (key == "camera.hfov_deg") {
    camera.hfov_deg = as_double();
  } else if (key == "camera.vfov_deg") {
    camera.vfov_deg = as_double();
  } else if (key == "camera.range") {
    camera.d_ray = as_double();
    nbv_rays.d_ray = as_double();
  } else if (key == "nbv.resolution") {
    grid_resolution = as_double();
  } else if (key == "nbv.margin") {
    grid_margin = as_double();
  } else if (key == "nbv.candidates") {
    nbv_candidates = as_int();
  } else if (key == "nbv.radius") {
    hemisphere_radius = as_double();
  } else if (key == "nbv.view_budget") {
    view_budget = as_int();
  } else if (key == "nbt.per_face") {
    nbt_per_face = as_int();
  } else if (key == "nbt.standoff") {
    nbt_standoff = as_double();
  } else if (key == "nbt.touch_budget") {
    touch_budget = as_int();
  } else if (key == "nbt.bootstrap") {
    bootstrap_touches = as_int();
  } else if (key == "stop.trans") {
    stop.trans_thresh = as_double();
  } else if (key == "stop.rot_deg") {
    stop.rot_thresh_deg = as_double();
  } else if (key == "declutter.push_distance") {
    push_distance = as_double();
  } else if (key == "declutter.gripper_length") {
    gripper_length = as_double();
  } else if (key == "declutter.max_actions") {
    max_declutter_actions = as_int();
  } else if (key == "declutter.mu_o") {
    mu_o = as_double();
  } else if (key == "declutter.mu_d") {
    mu_d = as_double();
  } else if (key == "declutter.mu_q") {
    mu_q = as_double();
  } else if (key == "declutter.push_samples") {
    push_samples = as_int();
  } else if (key == "metrics.model_samples") {
    metrics_model_samples = as_int();
  } else if (key == "output.dump_grid") {
    dump_grid = as_bool();
  } else {
    throw ConfigError("unknown parameter '" + key + "'");
  }
}

nlohmann::json Params::to_json() const {
  return {
      {"tiqf",
       {{"rho", tiqf.rho},
        {"conv_trans", tiqf.conv_trans},
        {"conv_rot_deg", tiqf.conv_rot_deg},
        {"max_iterations", tiqf.max_iterations},
        {"max_pairs", tiqf.max_pairs_per_iter},
        {"init_covariance", tiqf.init_covariance_scale},
        {"model_samples", tiqf.model_samples}}},
      {"camera",
       {{"hfov_deg", camera.hfov_deg},
        {"vfov_deg", camera.vfov_deg},
        {"cols", camera.ray_cols},
        {"rows", camera.ray_rows},
        {"range", camera.d_ray}}},
      {"nbv",
       {{"resolution", grid_resolution},
        {"margin", grid_margin},
        {"candidates", nbv_candidates},
        {"radius", hemisphere_radius},
        {"view_budget", view_budget},
        {"rays_cols", nbv_rays.ray_cols},
        {"rays_rows", nbv_rays.ray_rows}}},
      {"nbt",
       {{"per_face", nbt_per_face},
        {"standoff", nbt_standoff},
        {"touch_budget", touch_budget},
        {"bootstrap", bootstrap_touches}}},
      {"stop",
       {{"trans", stop.trans_thresh}, {"rot_deg", stop.rot_thresh_deg}}},
      {"declutter",
       {{"push_distance", push_distance},
        {"gripper_length", gripper_length},
        {"max_actions", max_declutter_actions},
        {"mu_o", mu_o},
        {"mu_d", mu_d},
        {"mu_q", mu_q},
        {"push_samples", push_samples},
        {"view_height", declutter_view_height}}},
      {"metrics", {{"model_samples", metrics_model_samples}}},
      {"output", {{"dump_grid", dump_grid}}},
  };
}

nlohmann::json RunRecord::to_json() const {
  nlohmann::json j;
  j["pipeline"] = pipeline;
  j["seed"] = seed;
  j["scene"] = scene_label;
  j["stages"] = nlohmann::json::array();
  for (const StageMetrics& s : stages) {
    j["stages"].push_back({{"stage", s.stage},
                           {"err_t_mm", s.metrics.err_t * 1000.0},
                           {"err_r_deg", s.metrics.err_r_deg},
                           {"adi_mm", s.metrics.err_adi * 1000.0}});
  }
  j["actions"] = actions;
  j["counts"] = {{"declutter_actions", declutter_actions},
                 {"views", views_used},
                 {"touches", touches_used}};
  j["wall_time_ms"] = wall_time_ms;
  j["failed"] = failed;
  j["failure"] = failure;
  return j;
}

RunRecord RunRecord::from_json(const nlohmann::json& j) {
  RunRecord rec;
  rec.pipeline = j.at("pipeline").get<std::string>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.scene_label = j.at("scene").get<std::string>();
  for (const auto& s : j.at("stages")) {
    StageMetrics sm;
    sm.stage = s.at("stage").get<std::string>();
    sm.metrics.err_t = s.at("err_t_mm").get<double>() / 1000.0;
    sm.metrics.err_r_deg = s.at("err_r_deg").get<double>();
    sm.metrics.err_adi = s.at("adi_mm").get<double>() / 1000.0;
    rec.stages.push_back(sm);
  }
  rec.actions = j.value("actions", nlohmann::json::array());
  if (j.contains("counts")) {
    rec.declutter_actions = j["counts"].value("declutter_actions", 0);
    rec.views_used = j["counts"].value("views", 0);
    rec.touches_used = j["counts"].value("touches", 0);
  }
  rec.wall_time_ms = j.value("wall_time_ms", 0.0);
  rec.failed = j.value("failed", false);
  rec.failure = j.value("failure", "");
  return rec;
}

sim::Scene load_scene_spec(const std::string& spec) {
  if (spec.rfind("gen:", 0) == 0) {
    std::string rest = spec.substr(4);
    sim::SceneGenOptions opts;
    const auto colon = rest.find(':');
    if (colon != std::string::npos) {
      const std::string flag = rest.substr(colon + 1);
      if (flag == "degraded") {
        opts.degraded_depth_target = true;
      } else {
        throw ConfigError("unknown scene generator flag '" + flag + "'");
      }
      rest = rest.substr(0, colon);
    }
    try {
      return sim::make_cluttered_scene(std::stoull(rest), opts);
    } catch (const std::invalid_argument&) {
      throw ConfigError("malformed generator spec '" + spec + "'");
    }
  }
  return sim::load_scene(spec);
}

// ---------------------------------------------------------------------------
// Stage helpers

namespace {

struct RunContext {
  sim::Scene scene;
  const Params& params;
  std::uint64_t seed;
  int target_id = 0;
  geom::PointCloud metrics_cloud;  // model frame, shared across pipelines
  RunRecord* rec = nullptr;
  std::string run_dir;  // empty = no file output
};

geom::Pose target_ground_truth(const RunContext& ctx) {
  return ctx.scene.target().pose;
}

void record_stage(RunContext& ctx, const std::string& stage,
                  const geom::Pose& estimate) {
  StageMetrics sm;
  sm.stage = stage;
  sm.metrics = sim::compute_metrics(estimate, target_ground_truth(ctx),
                                    ctx.metrics_cloud);
  ctx.rec->stages.push_back(sm);
}

view::Viewpoint static_viewpoint(const RunContext& ctx) {
  const auto& ws = ctx.scene.workspace;
  const geom::Vec3 center(0.5 * (ws.min().x() + ws.max().x()),
                          0.5 * (ws.min().y() + ws.max().y()),
                          ctx.scene.table_height);
  const double az = ctx.params.static_view_azimuth_deg * M_PI / 180.0;
  const double el = ctx.params.static_view_elevation_deg * M_PI / 180.0;
  const double r = ctx.params.hemisphere_radius;
  const geom::Vec3 pos = center + r * geom::Vec3(std::cos(el) * std::cos(az),
                                                 std::cos(el) * std::sin(az),
                                                 std::sin(el));
  return {pos, view::view_orientation(pos, center)};
}

view::Viewpoint top_down_viewpoint(const RunContext& ctx) {
  const auto& ws = ctx.scene.workspace;
  const geom::Vec3 center(0.5 * (ws.min().x() + ws.max().x()),
                          0.5 * (ws.min().y() + ws.max().y()),
                          ctx.scene.table_height);
  const geom::Vec3 pos =
      center + geom::Vec3(0.0, 0.0, ctx.params.declutter_view_height);
  return {pos, view::view_orientation(pos, center)};
}

Eigen::AlignedBox3d view_bounds(const RunContext& ctx) {
  const double r = ctx.params.hemisphere_radius;
  Eigen::AlignedBox3d b = ctx.scene.workspace;
  b.min() -= geom::Vec3(r, r, 0.0);
  b.max() += geom::Vec3(r, r, r);
  b.min().z() = ctx.scene.table_height + 0.02;
  return b;
}

// World point for a mask pixel: the depth return at (or near) the pixel,
// falling back to the table-plane intersection of the pixel ray.
geom::Vec3 lift_pixel(const RunContext& ctx, const sim::RenderResult& render,
                      const declutter::Vec2& px) {
  if (const auto p = render.lift_near(px)) return *p;
  const double tan_h = std::tan(0.5 * render.sensor.hfov_deg * M_PI / 180.0);
  const double tan_v = std::tan(0.5 * render.sensor.vfov_deg * M_PI / 180.0);
  const geom::Vec3 cam_dir(
      (2.0 * px.x() / render.width - 1.0) * tan_h,
      (2.0 * px.y() / render.height - 1.0) * tan_v, 1.0);
  const geom::Vec3 dir = render.view.orientation.rotate(cam_dir.normalized());
  const double dz = dir.z();
  if (std::abs(dz) < 1e-9) return render.view.position;
  const double t = (ctx.scene.table_height - render.view.position.z()) / dz;
  return render.view.position + t * dir;
}

// Image-plane direction -> world direction on the table plane.
geom::Vec3 image_dir_to_world(const sim::RenderResult& render,
                              const declutter::Vec2& dir_px) {
  const geom::Vec3 ex = render.view.orientation.rotate(geom::Vec3::UnitX());
  const geom::Vec3 ey = render.view.orientation.rotate(geom::Vec3::UnitY());
  geom::Vec3 d = dir_px.x() * ex + dir_px.y() * ey;
  d.z() = 0.0;
  const double n = d.norm();
  return n < 1e-12 ? geom::Vec3::UnitX() : geom::Vec3(d / n);
}

// The planners stop once the pose change stays below the stop criterion
// between each of the last two consecutive acquisitions (one small step can
// be a redundant measurement, two in a row indicate convergence).
bool acquisition_converged(const std::vector<geom::Pose>& history,
                           const touch::StopCriterion& crit) {
  if (history.size() < 3) return false;
  std::vector<geom::Pose> tail(history.end() - 3, history.end() - 1);
  return touch::should_stop(tail, crit) &&
         touch::should_stop(history, crit);
}

void declutter_stage(RunContext& ctx) {
  const view::Viewpoint topdown = top_down_viewpoint(ctx);
  declutter::DiscardZone zone{ctx.scene.discard_slots, 0};
  std::set<int> abandoned;  // pushed into the workspace boundary, given up
  int actions = 0;
  while (actions < ctx.params.max_declutter_actions) {
    const std::uint64_t round_seed =
        derive_seed(ctx.seed, 100 + static_cast<std::uint64_t>(actions));
    const sim::RenderResult render =
        render_depth(ctx.scene, topdown, ctx.params.camera, ctx.scene.noise,
                     round_seed);
    const declutter::SegMask mask = render.mask();
    std::vector<declutter::Detection> detections =
        declutter::extract_detections(mask);
    std::erase_if(detections, [&](const declutter::Detection& d) {
      return abandoned.count(d.id) && d.id != ctx.target_id;
    });
    bool target_found = false;
    for (declutter::Detection& det : detections) {
      const sim::GraspQuality gq = sim::grasp_quality_stub(
          ctx.scene, det.id, topdown, ctx.params.camera);
      det.grasp_quality = gq.q;
      det.grasp_pose = gq.pose;
      target_found |= det.id == ctx.target_id;
    }
    if (!target_found) {
      throw std::runtime_error("declutter: target invisible in overhead view");
    }

    declutter::GraphParams gp;
    gp.mu_o = ctx.params.mu_o;
    gp.mu_d = ctx.params.mu_d;
    gp.image_diagonal = mask.diagonal();
    declutter::DeclutterGraph graph =
        declutter::build_graph(detections, ctx.target_id, gp);
    declutter::attribute_actions(graph, ctx.params.mu_q);

    if (!ctx.run_dir.empty()) {
      io::write_text_file(ctx.run_dir + "/declutter_step_" +
                              std::to_string(actions) + ".dot",
                          io::graph_to_dot(graph));
    }

    // Stage ends when nothing still interacts with the target per the edge
    // rule (or when only the root remains).
    const declutter::Detection* target_det = nullptr;
    for (const auto& det : detections) {
      if (det.id == ctx.target_id) target_det = &det;
    }
    bool any_connected = false;
    for (const auto& det : detections) {
      if (det.id == ctx.target_id) continue;
      if (declutter::edge_weight(*target_det, det, gp) > 0.0) {
        any_connected = true;
        break;
      }
    }
    if (!any_connected) break;
    const auto next = declutter::next_object(graph);
    if (!next) break;

    const declutter::Detection* next_det = nullptr;
    for (const auto& det : detections) {
      if (det.id == next->id) next_det = &det;
    }

    nlohmann::json action{{"step", actions},
                          {"object", next->id},
                          {"weight", next->weight}};
    bool pushed = false;
    if (next->action == declutter::Action::kGrasp) {
      try {
        const declutter::GraspPlan plan = declutter::plan_grasp(
            *next_det, zone, [&](const declutter::Vec2& px) {
              return lift_pixel(ctx, render, px);
            });
        sim::apply_grasp_removal(ctx.scene, next->id);
        action["type"] = "grasp";
        action["point"] = {plan.point.x(), plan.point.y(), plan.point.z()};
        action["angle"] = plan.angle;
        action["place"] = {plan.place.x(), plan.place.y(), plan.place.z()};
      } catch (const std::runtime_error&) {
        pushed = true;  // no grasp pose or zone full: fall back to push
      }
    } else {
      pushed = true;
    }
    if (pushed) {
      declutter::PushParams pp;
      const double m_per_px =
          2.0 * ctx.params.declutter_view_height *
          std::tan(0.5 * ctx.params.camera.hfov_deg * M_PI / 180.0) /
          ctx.params.camera.ray_cols;
      pp.gripper_px = std::max(1.0, ctx.params.gripper_length / m_per_px);
      pp.n_samples = ctx.params.push_samples;
      pp.distance = ctx.params.push_distance;
      declutter::PushPlan plan = declutter::plan_push(
          mask, next->id, detections, pp, derive_seed(round_seed, 7));
      plan.point_world = lift_pixel(ctx, render, plan.point_px);
      plan.dir_world = image_dir_to_world(render, plan.dir_px);
      const sim::PushOutcome outcome =
          sim::apply_push(ctx.scene, next->id, plan);
      action["type"] = "push";
      action["point_px"] = {plan.point_px.x(), plan.point_px.y()};
      action["dir_world"] = {plan.dir_world->x(), plan.dir_world->y(),
                             plan.dir_world->z()};
      action["distance"] = plan.distance;
      action["clamped"] = outcome.clamped;
      if (outcome.clamped) {
        // The object cannot leave the workspace; stop planning for it.
        abandoned.insert(next->id);
        action["abandoned"] = true;
      }
    }
    ctx.rec->actions.push_back(action);
    ++actions;
  }
  ctx.rec->declutter_actions = actions;
}

struct VisionOutcome {
  geom::Pose pose;
  reg::FilterState state;
  geom::PointCloud target_cloud;  // accumulated segmented returns
};

VisionOutcome vision_stage(RunContext& ctx, bool active) {
  const view::Viewpoint first_view = static_viewpoint(ctx);
  const sim::RenderResult render0 =
      render_depth(ctx.scene, first_view, ctx.params.camera, ctx.scene.noise,
                   derive_seed(ctx.seed, 200));
  geom::PointCloud accumulated = render0.cloud_for_id(ctx.target_id);
  if (accumulated.size() < 3) {
    throw std::runtime_error(
        "vision: target yields fewer than 3 depth returns from the initial "
        "view");
  }
  const geom::Vec3 centroid = accumulated.centroid();
  const sim::SceneObject& target = ctx.scene.target();

  reg::Result est = reg::register_points(accumulated, target.mesh,
                                         std::nullopt, ctx.params.tiqf,
                                         derive_seed(ctx.seed, 201));
  ctx.rec->views_used = 1;
  ctx.rec->actions.push_back(
      {{"type", "view"},
       {"stage", active ? "active_vision" : "static_vision"},
       {"position",
        {first_view.position.x(), first_view.position.y(),
         first_view.position.z()}},
       {"registration", io::registration_report(est)}});
  record_stage(ctx, active ? "initial_vision" : "static_vision", est.pose);

  VisionOutcome out{est.pose, est.state, accumulated};
  if (!active) return out;

  view::OccupancyGrid grid = view::OccupancyGrid::around(
      centroid, ctx.params.grid_margin, ctx.params.grid_resolution);
  view::integrate_measurement(grid, first_view.position, render0.cloud());

  std::vector<geom::Pose> history{est.pose};
  int views = 1;
  while (views < ctx.params.view_budget &&
         !acquisition_converged(history, ctx.params.stop)) {
    const std::uint64_t view_seed =
        derive_seed(ctx.seed, 210 + static_cast<std::uint64_t>(views));
    const auto candidates = view::sample_viewpoints(
        centroid, ctx.params.hemisphere_radius, ctx.params.nbv_candidates,
        view_seed, view_bounds(ctx));
    const view::NbvSelection sel =
        view::select_nbv(grid, candidates, ctx.params.nbv_rays);
    const sim::RenderResult render =
        render_depth(ctx.scene, sel.view, ctx.params.camera, ctx.scene.noise,
                     derive_seed(view_seed, 1));
    view::integrate_measurement(grid, sel.view.position, render.cloud());
    const geom::PointCloud target_points =
        render.cloud_for_id(ctx.target_id);
    for (const geom::Vec3& p : target_points.points) {
      accumulated.points.push_back(p);
    }
    est = reg::register_points(accumulated, target.mesh, est.pose,
                               ctx.params.tiqf, derive_seed(view_seed, 2));
    history.push_back(est.pose);
    ++views;
    ctx.rec->actions.push_back(
        {{"type", "view"},
         {"stage", "active_vision"},
         {"position",
          {sel.view.position.x(), sel.view.position.y(),
           sel.view.position.z()}},
         {"gain_bits", sel.gain},
         {"grid_entropy_bits", view::grid_entropy(grid)},
         {"target_points", target_points.size()},
         {"registration", io::registration_report(est)}});
  }
  ctx.rec->views_used = views;
  if (ctx.params.dump_grid && !ctx.run_dir.empty()) {
    io::write_text_file(ctx.run_dir + "/grid.json",
                        io::grid_to_json(grid).dump());
  }
  record_stage(ctx, "active_vision", est.pose);
  out.pose = est.pose;
  out.state = est.state;
  out.target_cloud = accumulated;
  return out;
}

void tactile_stage(RunContext& ctx, const VisionOutcome& vision) {
  const sim::SceneObject& target = ctx.scene.target();
  reg::Params tactile_params = ctx.params.tiqf;
  tactile_params.pairing = reg::PairingMode::kAllPairs;
  // Denser model cloud for contact matching: the sampling spacing is the
  // tactile accuracy floor.
  tactile_params.model_samples =
      std::max(tactile_params.model_samples, 2500);

  geom::PointCloud contacts;
  geom::Pose pose = vision.pose;
  reg::FilterState state = vision.state;
  // The stop rule compares consecutive tactile acquisitions, so the history
  // starts at the post-bootstrap estimate, not at the vision pose.
  std::vector<geom::Pose> history;
  Rng pick(derive_seed(ctx.seed, 300));
  int touches = 0;

  // Random bootstrap probes from the candidate set until the filter has its
  // minimum of 3 contact points.
  int bootstrap_attempts = 0;
  while (static_cast<int>(contacts.size()) < ctx.params.bootstrap_touches &&
         bootstrap_attempts < 50) {
    const auto candidates = touch::sample_touch_actions(
        pose, target.mesh, ctx.params.nbt_per_face, ctx.params.nbt_standoff,
        derive_seed(ctx.seed, 310 + static_cast<std::uint64_t>(
                                        bootstrap_attempts)));
    const touch::TouchAction action =
        candidates[pick.uniform_index(candidates.size())];
    const auto result =
        sim::simulate_touch(ctx.scene, action, ctx.scene.noise,
                            derive_seed(ctx.seed, 320 + static_cast<std::uint64_t>(
                                                            bootstrap_attempts)));
    ++bootstrap_attempts;
    ++touches;
    nlohmann::json rec{{"type", "touch"}, {"mode", "bootstrap"}};
    if (result && result->object_id == ctx.target_id) {
      contacts.points.push_back(result->point);
      rec["contact"] = {result->point.x(), result->point.y(),
                        result->point.z()};
    } else {
      rec["contact"] = nullptr;  // miss or non-target contact, rejected
    }
    ctx.rec->actions.push_back(rec);
  }
  if (static_cast<int>(contacts.size()) < ctx.params.bootstrap_touches) {
    throw std::runtime_error("tactile: bootstrap touches keep missing");
  }

  reg::Result est = reg::register_points(contacts, target.mesh, pose,
                                         tactile_params,
                                         derive_seed(ctx.seed, 330),
                                         vision.state);
  pose = est.pose;
  state = est.state;
  history.push_back(pose);

  int planned = 0;
  while (planned < ctx.params.touch_budget &&
         !acquisition_converged(history, ctx.params.stop)) {
    const std::uint64_t step_seed =
        derive_seed(ctx.seed, 340 + static_cast<std::uint64_t>(planned));
    const auto candidates = touch::sample_touch_actions(
        pose, target.mesh, ctx.params.nbt_per_face, ctx.params.nbt_standoff,
        step_seed);
    const touch::NbtSelection sel = touch::select_nbt(
        state, candidates, target.mesh, pose, contacts, tactile_params.rho);
    const auto result = sim::simulate_touch(ctx.scene, sel.action,
                                            ctx.scene.noise,
                                            derive_seed(step_seed, 1));
    ++planned;
    ++touches;
    nlohmann::json rec{{"type", "touch"},
                       {"mode", "planned"},
                       {"candidates", candidates.size()},
                       {"kl", sel.kl},
                       {"ray_origin",
                        {sel.action.ray.origin.x(), sel.action.ray.origin.y(),
                         sel.action.ray.origin.z()}},
                       {"ray_dir",
                        {sel.action.ray.direction.x(),
                         sel.action.ray.direction.y(),
                         sel.action.ray.direction.z()}}};
    if (result && result->object_id == ctx.target_id) {
      contacts.points.push_back(result->point);
      est = reg::register_points(contacts, target.mesh, pose, tactile_params,
                                 derive_seed(step_seed, 2), vision.state);
      if (contacts.size() >= 4) {
        // Few-point registration can settle in a nearest-neighbor local
        // minimum; re-solve from a grid around the vision pose and keep
        // whichever explains the contacts better.
        const reg::Result global = reg::register_points_multistart(
            contacts, target.mesh, vision.pose, tactile_params,
            derive_seed(step_seed, 4), vision.state);
        if (reg::mean_surface_residual(contacts, target.mesh, global.pose) <
            reg::mean_surface_residual(contacts, target.mesh, est.pose)) {
          est = global;
        }
      }
      pose = est.pose;
      state = est.state;
      history.push_back(pose);
      rec["contact"] = {result->point.x(), result->point.y(),
                        result->point.z()};
      rec["covariance_trace"] = state.covariance.trace();
    } else {
      rec["contact"] = nullptr;
    }
    ctx.rec->actions.push_back(rec);
  }
  ctx.rec->touches_used = touches;
  record_stage(ctx, "tactile", pose);
}

}  // namespace

RunRecord run_pipeline(const sim::Scene& scene, Pipeline pipeline,
                       std::uint64_t seed, const Params& params,
                       const std::string& out_dir,
                       const std::string& scene_label) {
  const auto t0 = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.pipeline = pipeline_name(pipeline);
  rec.seed = seed;
  rec.scene_label = scene_label;

  RunContext ctx{scene, params, seed, 0, {}, &rec, {}};
  if (!out_dir.empty()) {
    ctx.run_dir = out_dir + "/" + rec.pipeline + "_seed" +
                  std::to_string(seed);
    fs::create_directories(ctx.run_dir);
  }

  try {
    ctx.target_id = ctx.scene.target().id;
    ctx.metrics_cloud = geom::sample_mesh_surface(
        ctx.scene.target().mesh, params.metrics_model_samples,
        derive_seed(seed, 999));

    if (pipeline == Pipeline::kDeclutterActiveVision ||
        pipeline == Pipeline::kFull) {
      declutter_stage(ctx);
    }
    const bool active = pipeline != Pipeline::kStatic;
    const VisionOutcome vision = vision_stage(ctx, active);
    if (pipeline == Pipeline::kFull) {
      tactile_stage(ctx, vision);
    }
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = e.what();
  }

  rec.wall_time_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t0)
                         .count();

  if (!ctx.run_dir.empty()) {
    nlohmann::json config{{"scene", scene_label},
                          {"pipeline", rec.pipeline},
                          {"seed", seed},
                          {"params", params.to_json()}};
    io::write_text_file(ctx.run_dir + "/config.json", config.dump(2));
    io::write_text_file(ctx.run_dir + "/record.json", rec.to_json().dump(2));
    io::write_text_file(ctx.run_dir + "/metrics.csv", metrics_csv(rec));
  }
  return rec;
}

std::string metrics_csv(const RunRecord& record) {
  std::ostringstream out;
  out << "scene,seed,stage,err_t_mm,err_r_deg,adi_mm\n";
  for (const StageMetrics& s : record.stages) {
    out << record.scene_label << ',' << record.seed << ',' << s.stage << ','
        << io::format_double(s.metrics.err_t * 1000.0) << ','
        << io::format_double(s.metrics.err_r_deg) << ','
        << io::format_double(s.metrics.err_adi * 1000.0) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Reporting

namespace {

double mean_of(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double mad_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const double med = median_of(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::abs(x - med));
  return median_of(dev);
}

}  // namespace

void write_report(const std::vector<RunRecord>& records,
                  const std::string& out_dir) {
  if (records.empty()) {
    throw std::invalid_argument("write_report: no records");
  }
  fs::create_directories(out_dir);

  // Final-stage errors per pipeline, in first-seen pipeline order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> err_t, adi;
  for (const RunRecord& rec : records) {
    if (rec.failed || rec.stages.empty()) continue;
    if (!err_t.count(rec.pipeline)) order.push_back(rec.pipeline);
    err_t[rec.pipeline].push_back(rec.stages.back().metrics.err_t * 1000.0);
    adi[rec.pipeline].push_back(rec.stages.back().metrics.err_adi * 1000.0);
  }

  std::ostringstream summary;
  summary << "pipeline,n,err_t_mm_mean,err_t_mm_std,err_t_mm_median,"
             "err_t_mm_mad,adi_mm_mean,adi_mm_std,adi_mm_median,adi_mm_mad\n";
  for (const std::string& p : order) {
    const auto& t = err_t[p];
    const auto& a = adi[p];
    summary << p << ',' << t.size() << ',' << io::format_double(mean_of(t))
            << ',' << io::format_double(stddev_of(t)) << ','
            << io::format_double(median_of(t)) << ','
            << io::format_double(mad_of(t)) << ','
            << io::format_double(mean_of(a)) << ','
            << io::format_double(stddev_of(a)) << ','
            << io::format_double(median_of(a)) << ','
            << io::format_double(mad_of(a)) << '\n';
  }
  io::write_text_file(out_dir + "/summary.csv", summary.str());

  // Per-stage series (one row per stage of each run).
  std::ostringstream series;
  series << "pipeline,scene,seed,step,stage,err_t_mm,adi_mm\n";
  std::map<std::string, std::map<std::size_t, std::vector<double>>> adi_steps;
  for (const RunRecord& rec : records) {
    if (rec.failed) continue;
    for (std::size_t i = 0; i < rec.stages.size(); ++i) {
      const StageMetrics& s = rec.stages[i];
      series << rec.pipeline << ',' << rec.scene_label << ',' << rec.seed
             << ',' << i << ',' << s.stage << ','
             << io::format_double(s.metrics.err_t * 1000.0) << ','
             << io::format_double(s.metrics.err_adi * 1000.0) << '\n';
      adi_steps[rec.pipeline][i].push_back(s.metrics.err_adi * 1000.0);
    }
  }
  io::write_text_file(out_dir + "/series.csv", series.str());

  std::vector<io::Series> plot;
  for (const std::string& p : order) {
    io::Series s;
    s.label = p;
    for (auto& [step, values] : adi_steps[p]) {
      (void)step;
      s.values.push_back(median_of(values));
    }
    plot.push_back(std::move(s));
  }
  io::write_text_file(out_dir + "/series.svg",
                      io::render_series_svg(plot, "median ADI per stage",
                                            "ADI (mm)"));
}

void write_report_from_files(const std::vector<std::string>& record_paths,
                             const std::string& out_dir) {
  std::vector<RunRecord> records;
  records.reserve(record_paths.size());
  for (const std::string& path : record_paths) {
    try {
      records.push_back(
          RunRecord::from_json(nlohmann::json::parse(io::read_text_file(path))));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed record file " + path + ": " + e.what());
    }
  }
  write_report(records, out_dir);
}

}  // namespace avtp::pipeline
