// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "core/error.hpp"
#include "core/meshes.hpp"
#include "core/rng.hpp"

namespace avtp::sim {

const SceneObject& Scene::target() const {
  for (const SceneObject& o : objects) {
    if (o.is_target) return o;
  }
  throw std::runtime_error("Scene: no target object");
}

const SceneObject* Scene::find(int id) const {
  for (const SceneObject& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

SceneObject* Scene::find(int id) {
  for (SceneObject& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Scene file parsing (TOML subset)

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct TomlValue {
  enum class Kind { kNumber, kBool, kString, kArray } kind = Kind::kNumber;
  double number = 0.0;
  bool boolean = false;
  std::string text;
  std::vector<double> array;
};

TomlValue parse_value(const std::string& raw, int lineno) {
  const std::string v = trim(raw);
  TomlValue out;
  if (v.empty()) throw ConfigError("scene: empty value at line " + std::to_string(lineno));
  if (v == "true" || v == "false") {
    out.kind = TomlValue::Kind::kBool;
    out.boolean = v == "true";
    return out;
  }
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') {
      throw ConfigError("scene: unterminated string at line " +
                        std::to_string(lineno));
    }
    out.kind = TomlValue::Kind::kString;
    out.text = v.substr(1, v.size() - 2);
    return out;
  }
  if (v.front() == '[') {
    if (v.back() != ']') {
      throw ConfigError("scene: unterminated array at line " +
                        std::to_string(lineno));
    }
    out.kind = TomlValue::Kind::kArray;
    std::string body = v.substr(1, v.size() - 2);
    std::replace(body.begin(), body.end(), ',', ' ');
    std::istringstream is(body);
    double x = 0.0;
    while (is >> x) out.array.push_back(x);
    if (!is.eof()) {
      throw ConfigError("scene: malformed number array at line " +
                        std::to_string(lineno));
    }
    return out;
  }
  try {
    std::size_t used = 0;
    out.number = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
  } catch (const std::exception&) {
    throw ConfigError("scene: malformed value '" + v + "' at line " +
                      std::to_string(lineno));
  }
  return out;
}

geom::Vec3 to_vec3(const TomlValue& v, const std::string& key, int lineno) {
  if (v.kind != TomlValue::Kind::kArray || v.array.size() != 3) {
    throw ConfigError("scene: '" + key + "' must be a 3-array (line " +
                      std::to_string(lineno) + ")");
  }
  return {v.array[0], v.array[1], v.array[2]};
}

std::string dirname(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

struct ObjectSpec {
  int id = -1;
  std::string mesh;
  geom::Vec3 position = geom::Vec3::Zero();
  geom::Quat quaternion = geom::Quat::identity();
  bool is_target = false;
  double grasp_quality = 0.5;
  int lineno = 0;
};

}  // namespace

Scene parse_scene(const std::string& text, const std::string& base_dir) {
  Scene scene;
  scene.workspace =
      Eigen::AlignedBox3d(geom::Vec3(-0.32, -0.32, 0.0),
                          geom::Vec3(0.32, 0.32, 0.6));
  std::vector<ObjectSpec> specs;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.rfind("[[", 0) == 0 && line.size() > 4 &&
          line.substr(line.size() - 2) == "]]") {
        section = trim(line.substr(2, line.size() - 4));
        if (section != "object") {
          throw ConfigError("scene: unknown table array '" + section +
                            "' at line " + std::to_string(lineno));
        }
        specs.emplace_back();
        specs.back().lineno = lineno;
      } else if (line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
      } else {
        throw ConfigError("scene: malformed section at line " +
                          std::to_string(lineno));
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("scene: expected key = value at line " +
                        std::to_string(lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const TomlValue value = parse_value(line.substr(eq + 1), lineno);

    if (section.empty()) {
      if (key == "table_height") {
        scene.table_height = value.number;
      } else if (key == "degraded_depth_target") {
        scene.degraded_depth_target = value.boolean;
      } else if (key == "degraded_drop_fraction") {
        scene.degraded_drop_fraction = value.number;
      } else {
        throw ConfigError("scene: unknown key '" + key + "' at line " +
                          std::to_string(lineno));
      }
    } else if (section == "workspace") {
      if (key == "min") {
        scene.workspace.min() = to_vec3(value, key, lineno);
      } else if (key == "max") {
        scene.workspace.max() = to_vec3(value, key, lineno);
      } else {
        throw ConfigError("scene: unknown workspace key '" + key + "'");
      }
    } else if (section == "noise") {
      if (key == "depth_sigma") {
        scene.noise.depth_sigma = value.number;
      } else if (key == "touch_sigma") {
        scene.noise.touch_sigma = value.number;
      } else if (key == "depth_bias") {
        scene.noise.depth_bias = value.number;
      } else {
        throw ConfigError("scene: unknown noise key '" + key + "'");
      }
    } else if (section == "discard") {
      if (key == "slots") {
        if (value.kind != TomlValue::Kind::kArray ||
            value.array.size() % 3 != 0) {
          throw ConfigError("scene: discard slots must be a flat x,y,z array");
        }
        for (std::size_t i = 0; i + 2 < value.array.size(); i += 3) {
          scene.discard_slots.emplace_back(value.array[i], value.array[i + 1],
                                           value.array[i + 2]);
        }
      } else {
        throw ConfigError("scene: unknown discard key '" + key + "'");
      }
    } else if (section == "object") {
      ObjectSpec& spec = specs.back();
      if (key == "id") {
        spec.id = static_cast<int>(value.number);
      } else if (key == "mesh") {
        spec.mesh = value.text;
      } else if (key == "position") {
        spec.position = to_vec3(value, key, lineno);
      } else if (key == "quaternion") {
        if (value.kind != TomlValue::Kind::kArray || value.array.size() != 4) {
          throw ConfigError("scene: quaternion must be [w, x, y, z] (line " +
                            std::to_string(lineno) + ")");
        }
        spec.quaternion = geom::Quat{value.array[0], value.array[1],
                                     value.array[2], value.array[3]};
      } else if (key == "is_target") {
        spec.is_target = value.boolean;
      } else if (key == "grasp_quality") {
        spec.grasp_quality = value.number;
      } else {
        throw ConfigError("scene: unknown object key '" + key + "' at line " +
                          std::to_string(lineno));
      }
    } else {
      throw ConfigError("scene: unknown section '" + section + "'");
    }
  }

  if (scene.noise.depth_sigma < 0.0 || scene.noise.touch_sigma < 0.0) {
    throw ConfigError("scene: noise sigmas must be >= 0");
  }
  if (scene.workspace.isEmpty()) {
    throw ConfigError("scene: workspace min must be below max");
  }
  int targets = 0;
  std::map<int, int> seen;
  for (const ObjectSpec& spec : specs) {
    if (spec.id < 1) {
      throw ConfigError("scene: object near line " +
                        std::to_string(spec.lineno) +
                        " needs an id >= 1");
    }
    if (seen.count(spec.id)) {
      throw ConfigError("scene: duplicate object id " +
                        std::to_string(spec.id));
    }
    seen[spec.id] = 1;
    if (spec.mesh.empty()) {
      throw ConfigError("scene: object " + std::to_string(spec.id) +
                        " has no mesh");
    }
    if (spec.grasp_quality < 0.0 || spec.grasp_quality > 1.0) {
      throw ConfigError("scene: grasp_quality must be in [0, 1]");
    }
    targets += spec.is_target ? 1 : 0;

    SceneObject obj;
    obj.id = spec.id;
    obj.mesh_path = base_dir + "/" + spec.mesh;
    obj.mesh = geom::load_obj(obj.mesh_path);
    try {
      obj.pose = geom::Pose{spec.quaternion.normalized(), spec.position};
    } catch (const std::invalid_argument&) {
      throw ConfigError("scene: object " + std::to_string(spec.id) +
                        " has a zero quaternion");
    }
    obj.is_target = spec.is_target;
    obj.base_grasp_quality = spec.grasp_quality;
    const auto box = geom::mesh_aabb(obj.mesh, obj.pose);
    if (box.min().z() < scene.table_height - 1e-6) {
      throw ConfigError("scene: object " + std::to_string(spec.id) +
                        " extends below the table");
    }
    scene.objects.push_back(std::move(obj));
  }
  if (targets != 1) {
    throw ConfigError("scene: exactly one object must set is_target");
  }
  return scene;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str(), dirname(path));
}

// ---------------------------------------------------------------------------
// Rendering and touching

namespace {

// Table quad around the workspace, generous margin.
geom::TriangleMesh make_table_mesh(const Scene& scene) {
  const auto& ws = scene.workspace;
  const double margin = 1.0;
  const double x0 = ws.min().x() - margin, x1 = ws.max().x() + margin;
  const double y0 = ws.min().y() - margin, y1 = ws.max().y() + margin;
  const double z = scene.table_height;
  return geom::TriangleMesh::create(
      {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}},
      {{0, 1, 2}, {0, 2, 3}});
}

struct LocalFrames {
  std::vector<geom::Pose> inverse;  // per object
};

LocalFrames make_frames(const Scene& scene) {
  LocalFrames f;
  f.inverse.reserve(scene.objects.size());
  for (const SceneObject& o : scene.objects) {
    f.inverse.push_back(o.pose.inverse());
  }
  return f;
}

}  // namespace

int RenderResult::count_id(int id) const {
  int n = 0;
  for (int v : ids) n += v == id ? 1 : 0;
  return n;
}

geom::PointCloud RenderResult::cloud() const {
  geom::PointCloud c;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (valid[i]) c.points.push_back(points[i]);
  }
  return c;
}

geom::PointCloud RenderResult::cloud_for_id(int id) const {
  geom::PointCloud c;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (valid[i] && ids[i] == id) c.points.push_back(points[i]);
  }
  return c;
}

declutter::SegMask RenderResult::mask() const {
  declutter::SegMask m;
  m.width = width;
  m.height = height;
  m.labels = ids;
  return m;
}

std::optional<geom::Vec3> RenderResult::lift(int x, int y) const {
  if (x < 0 || y < 0 || x >= width || y >= height) return std::nullopt;
  const std::size_t idx = static_cast<std::size_t>(y) * width + x;
  if (!valid[idx]) return std::nullopt;
  return points[idx];
}

std::optional<geom::Vec3> RenderResult::lift_near(const declutter::Vec2& px,
                                                  int max_ring) const {
  const int cx = static_cast<int>(std::floor(px.x()));
  const int cy = static_cast<int>(std::floor(px.y()));
  for (int ring = 0; ring <= max_ring; ++ring) {
    for (int dy = -ring; dy <= ring; ++dy) {
      for (int dx = -ring; dx <= ring; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != ring) continue;
        const auto p = lift(cx + dx, cy + dy);
        if (p) return p;
      }
    }
  }
  return std::nullopt;
}

RenderResult render_depth(const Scene& scene, const view::Viewpoint& view,
                          const view::SensorModel& sensor,
                          const NoiseModel& noise, std::uint64_t seed,
                          int solo_id) {
  RenderResult out;
  out.width = sensor.ray_cols;
  out.height = sensor.ray_rows;
  out.view = view;
  out.sensor = sensor;
  const std::size_t n_px =
      static_cast<std::size_t>(sensor.ray_cols) * sensor.ray_rows;
  out.ids.assign(n_px, 0);
  out.valid.assign(n_px, 0);
  out.points.assign(n_px, geom::Vec3::Zero());

  const geom::TriangleMesh table = make_table_mesh(scene);
  const LocalFrames frames = make_frames(scene);
  const std::vector<geom::Vec3> cam_rays = view::sensor_rays(sensor);
  Rng rng(seed);
  const int target_id = [&] {
    for (const SceneObject& o : scene.objects) {
      if (o.is_target) return o.id;
    }
    return -1;
  }();

  for (std::size_t px = 0; px < n_px; ++px) {
    geom::Ray ray;
    ray.origin = view.position;
    ray.direction = view.orientation.rotate(cam_rays[px]);

    double best_t = sensor.d_ray;
    int best_id = -1;
    for (std::size_t k = 0; k < scene.objects.size(); ++k) {
      if (solo_id >= 0 && scene.objects[k].id != solo_id) continue;
      geom::Ray local;
      local.origin = frames.inverse[k].apply(ray.origin);
      local.direction = frames.inverse[k].rotation.rotate(ray.direction);
      const auto hit = scene.objects[k].mesh.intersect(local);
      if (hit && hit->distance < best_t) {
        best_t = hit->distance;
        best_id = static_cast<int>(k);
      }
    }
    double table_t = std::numeric_limits<double>::infinity();
    if (const auto hit = table.intersect(ray)) {
      if (hit->distance <= sensor.d_ray) table_t = hit->distance;
    }

    int hit_id = 0;
    double true_t = table_t;
    if (best_id >= 0 && best_t < table_t) {
      hit_id = scene.objects[best_id].id;
      true_t = best_t;
    } else if (!std::isfinite(table_t)) {
      continue;  // nothing within range
    }

    out.ids[px] = hit_id;
    double t = true_t + noise.depth_bias;
    bool keep = true;
    if (scene.degraded_depth_target && hit_id == target_id) {
      keep = rng.uniform() >= scene.degraded_drop_fraction;
    }
    if (noise.depth_sigma > 0.0) t += rng.normal(0.0, noise.depth_sigma);
    if (keep) {
      out.valid[px] = 1;
      out.points[px] = ray.origin + t * ray.direction;
    }
  }
  return out;
}

std::optional<TouchResult> simulate_touch(const Scene& scene,
                                          const touch::TouchAction& action,
                                          const NoiseModel& noise,
                                          std::uint64_t seed) {
  const LocalFrames frames = make_frames(scene);
  double best_t = std::numeric_limits<double>::infinity();
  int best_id = -1;
  for (std::size_t k = 0; k < scene.objects.size(); ++k) {
    geom::Ray local;
    local.origin = frames.inverse[k].apply(action.ray.origin);
    local.direction = frames.inverse[k].rotation.rotate(action.ray.direction);
    const auto hit = scene.objects[k].mesh.intersect(local);
    if (hit && hit->distance < best_t) {
      best_t = hit->distance;
      best_id = static_cast<int>(k);
    }
  }
  if (best_id < 0) return std::nullopt;
  // The probe stops at the table like at any other obstacle.
  const geom::TriangleMesh table = make_table_mesh(scene);
  if (const auto hit = table.intersect(action.ray)) {
    if (hit->distance < best_t) return std::nullopt;
  }
  TouchResult res;
  res.object_id = scene.objects[best_id].id;
  res.point = action.ray.origin + best_t * action.ray.direction;
  if (noise.touch_sigma > 0.0) {
    Rng rng(seed);
    res.point += noise.touch_sigma *
                 geom::Vec3(rng.normal(), rng.normal(), rng.normal());
  }
  return res;
}

PushOutcome apply_push(Scene& scene, int id, const declutter::PushPlan& plan) {
  SceneObject* obj = scene.find(id);
  if (!obj) throw std::invalid_argument("apply_push: unknown object id");
  if (!plan.dir_world) {
    throw std::invalid_argument("apply_push: plan has no world direction");
  }
  geom::Vec3 dir = *plan.dir_world;
  dir.z() = 0.0;  // the object slides on the table plane
  const double n = dir.norm();
  PushOutcome outcome;
  if (n < 1e-12 || plan.distance == 0.0) return outcome;
  dir /= n;
  geom::Vec3 delta = plan.distance * dir;

  const geom::Vec3 c0 = obj->pose.apply(obj->mesh.surface_centroid());
  geom::Vec3 c1 = c0 + delta;
  for (int k = 0; k < 2; ++k) {
    const double lo = scene.workspace.min()[k];
    const double hi = scene.workspace.max()[k];
    const double clamped = std::clamp(c1[k], lo, hi);
    if (clamped != c1[k]) {
      c1[k] = clamped;
      outcome.clamped = true;
    }
  }
  delta = c1 - c0;
  delta.z() = 0.0;
  obj->pose.translation += delta;
  outcome.applied_delta = delta;
  return outcome;
}

void apply_grasp_removal(Scene& scene, int id) {
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    if (scene.objects[i].id != id) continue;
    if (scene.objects[i].is_target) {
      throw std::invalid_argument(
          "apply_grasp_removal: cannot remove the target");
    }
    scene.objects.erase(scene.objects.begin() + static_cast<long>(i));
    return;
  }
  throw std::invalid_argument("apply_grasp_removal: unknown object id");
}

GraspQuality grasp_quality_stub(const Scene& scene, int id,
                                const view::Viewpoint& view,
                                const view::SensorModel& sensor) {
  const SceneObject* obj = scene.find(id);
  if (!obj) throw std::invalid_argument("grasp_quality_stub: unknown id");
  const NoiseModel noiseless{0.0, 0.0};
  const RenderResult full = render_depth(scene, view, sensor, noiseless, 0);
  const RenderResult solo =
      render_depth(scene, view, sensor, noiseless, 0, id);
  const int visible = full.count_id(id);
  const int unoccluded = solo.count_id(id);
  GraspQuality out;
  if (visible == 0 || unoccluded == 0) return out;  // fully occluded
  const double fraction =
      static_cast<double>(visible) / static_cast<double>(unoccluded);
  out.q = obj->base_grasp_quality * fraction;

  // Grasp at the visible-region centroid, angle along the minor axis of its
  // min-area box.
  declutter::SegMask mask = full.mask();
  for (int& v : mask.labels) v = v == id ? id : 0;
  const auto detections = declutter::extract_detections(mask);
  for (const auto& det : detections) {
    if (det.id != id) continue;
    declutter::GraspPose pose;
    pose.pixel = det.centroid;
    pose.angle = det.box.size.x() <= det.box.size.y()
                     ? det.box.angle
                     : det.box.angle + 0.5 * M_PI;
    out.pose = pose;
    break;
  }
  return out;
}

MetricsReport compute_metrics(const geom::Pose& est, const geom::Pose& gt,
                              const geom::PointCloud& model) {
  if (model.empty()) {
    throw std::invalid_argument("compute_metrics: empty model cloud");
  }
  MetricsReport report;
  report.err_t = (est.translation - gt.translation).norm();
  const geom::Mat3 rel =
      geom::quat_to_rotmat(est.rotation) *
      geom::quat_to_rotmat(gt.rotation).transpose();
  const double arg = std::clamp(0.5 * (rel.trace() - 1.0), -1.0, 1.0);
  report.err_r_deg = std::acos(arg) * 180.0 / M_PI;

  geom::PointCloud est_points;
  est_points.points.reserve(model.size());
  for (const geom::Vec3& p : model.points) {
    est_points.points.push_back(est.apply(p));
  }
  const geom::KdTree tree(est_points);
  double acc = 0.0;
  for (const geom::Vec3& p : model.points) {
    acc += tree.nearest(gt.apply(p)).distance;
  }
  report.err_adi = acc / static_cast<double>(model.size());
  return report;
}

// ---------------------------------------------------------------------------
// Procedural clutter scenes

Scene make_cluttered_scene(std::uint64_t seed, const SceneGenOptions& opts) {
  Rng rng(derive_seed(seed, 91));
  Scene scene;
  scene.workspace = Eigen::AlignedBox3d(geom::Vec3(-0.32, -0.32, 0.0),
                                        geom::Vec3(0.32, 0.32, 0.6));
  scene.table_height = 0.0;
  scene.noise.depth_sigma = opts.depth_sigma;
  scene.noise.touch_sigma = opts.touch_sigma;
  scene.noise.depth_bias = opts.depth_bias;
  scene.degraded_depth_target = opts.degraded_depth_target;
  scene.discard_slots = {{-0.28, -0.28, 0.0}, {-0.28, 0.28, 0.0},
                         {0.28, -0.28, 0.0},  {0.28, 0.28, 0.0},
                         {-0.28, 0.0, 0.0},   {0.28, 0.0, 0.0}};

  SceneObject target;
  target.id = 1;
  target.mesh_path = "<generated:lshape>";
  target.mesh = make_lshape_mesh();
  const double yaw = rng.uniform(-40.0, 40.0) * M_PI / 180.0;
  target.pose = geom::Pose{
      geom::Quat::from_axis_angle(geom::Vec3::UnitZ(), yaw),
      geom::Vec3(rng.uniform(-0.04, 0.04), rng.uniform(-0.04, 0.04), 0.0)};
  target.is_target = true;
  target.base_grasp_quality = 0.0;  // the target is never grasped away
  scene.objects.push_back(std::move(target));

  std::vector<double> qualities = {0.85, 0.7, 0.6, 0.05};
  while (static_cast<int>(qualities.size()) < opts.n_clutter) {
    qualities.push_back(0.7);
  }
  qualities.resize(static_cast<std::size_t>(opts.n_clutter));
  rng.shuffle(qualities);

  for (int i = 0; i < opts.n_clutter; ++i) {
    SceneObject obj;
    obj.id = 2 + i;
    if (rng.uniform() < 0.5) {
      const double sx = rng.uniform(0.04, 0.065);
      const double sy = rng.uniform(0.04, 0.065);
      const double sz = rng.uniform(0.06, 0.12);
      obj.mesh = make_box_mesh(sx, sy, sz);
      obj.mesh_path = "<generated:box>";
    } else {
      const double r = rng.uniform(0.018, 0.03);
      const double h = rng.uniform(0.06, 0.11);
      obj.mesh = make_cylinder_mesh(r, h, 14);
      obj.mesh_path = "<generated:cylinder>";
    }
    const double base_angle = (45.0 + 90.0 * i) * M_PI / 180.0;
    const double angle = base_angle + rng.uniform(-0.45, 0.45);
    const double radius = rng.uniform(0.085, 0.13);
    const geom::Vec3& tpos = scene.objects.front().pose.translation;
    obj.pose = geom::Pose{
        geom::Quat::from_axis_angle(geom::Vec3::UnitZ(),
                                    rng.uniform(0.0, 2.0 * M_PI)),
        geom::Vec3(tpos.x() + radius * std::cos(angle),
                   tpos.y() + radius * std::sin(angle), 0.0)};
    obj.is_target = false;
    obj.base_grasp_quality = qualities[static_cast<std::size_t>(i)];
    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

}  // namespace avtp::sim
