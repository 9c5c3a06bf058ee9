// Copyright (C) 2026 the avtp authors
// SPDX-License-Identifier: Apache-2.0

#include "core/declutter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>

#include "core/rng.hpp"

namespace avtp::declutter {

namespace {

double polygon_signed_area(const std::vector<Vec2>& poly) {
  double acc = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    acc += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * acc;
}

Vec2 polygon_centroid(const std::vector<Vec2>& poly) {
  double a = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % poly.size()];
    const double cross = p.x() * q.y() - q.x() * p.y();
    a += cross;
    c += (p + q) * cross;
  }
  if (std::abs(a) < 1e-12) {
    // Degenerate polygon; fall back to the vertex mean.
    Vec2 m = Vec2::Zero();
    for (const Vec2& p : poly) m += p;
    return m / static_cast<double>(poly.size());
  }
  return c / (3.0 * a);
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x() == b.x() && a.y() == b.y();
                        }),
            pts.end());
  const auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

RotatedRect min_area_rect(const std::vector<Vec2>& points) {
  const std::vector<Vec2> hull = convex_hull(points);
  RotatedRect best;
  if (hull.size() < 3) {
    // Segment or point: a zero-thickness box.
    Vec2 lo = hull.front(), hi = hull.front();
    for (const Vec2& p : hull) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    best.center = 0.5 * (lo + hi);
    best.size = hi - lo;
    best.angle = 0.0;
    return best;
  }
  double best_area = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 e = hull[(i + 1) % hull.size()] - hull[i];
    const double angle = std::atan2(e.y(), e.x());
    const double c = std::cos(-angle);
    const double s = std::sin(-angle);
    double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
    double min_y = min_x, max_y = -min_x;
    for (const Vec2& p : hull) {
      const double x = c * p.x() - s * p.y();
      const double y = s * p.x() + c * p.y();
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
    const double area = (max_x - min_x) * (max_y - min_y);
    if (area < best_area) {
      best_area = area;
      const double cx = 0.5 * (min_x + max_x);
      const double cy = 0.5 * (min_y + max_y);
      // Rotate the center back into image coordinates.
      best.center = Vec2(std::cos(angle) * cx - std::sin(angle) * cy,
                         std::sin(angle) * cx + std::cos(angle) * cy);
      best.size = Vec2(max_x - min_x, max_y - min_y);
      best.angle = angle;
    }
  }
  return best;
}

}  // namespace

std::array<Vec2, 4> RotatedRect::corners() const {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  const Vec2 u(c, s);
  const Vec2 v(-s, c);
  const Vec2 hu = 0.5 * size.x() * u;
  const Vec2 hv = 0.5 * size.y() * v;
  return {center + hu + hv, center - hu + hv, center - hu - hv,
          center + hu - hv};
}

bool DeclutterGraph::is_leaf(int id) const {
  for (const auto& [child, edge] : incoming) {
    (void)child;
    if (edge.parent == id) return false;
  }
  return true;
}

std::vector<int> DeclutterGraph::leaves() const {
  std::vector<int> out;
  for (const auto& [id, det] : vertices) {
    (void)det;
    if (id != root && is_leaf(id)) out.push_back(id);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection extraction

namespace {

// Directions on the corner lattice: right, down, left, up (y grows down).
const std::array<Vec2, 4> kDirs = {Vec2(1, 0), Vec2(0, 1), Vec2(-1, 0),
                                   Vec2(0, -1)};

struct CrackEdges {
  // outgoing[vertex][dir] = true. Vertex key = x + (width+1) * y.
  std::map<std::int64_t, std::array<bool, 4>> outgoing;
  int stride = 0;

  std::int64_t key(int x, int y) const {
    return static_cast<std::int64_t>(y) * stride + x;
  }
  void add(int x, int y, int dir) {
    auto& slots = outgoing.try_emplace(key(x, y)).first->second;
    slots[dir] = true;
  }
};

// Traces the boundary loops of a pixel set and returns the loop with the
// largest absolute area (the outer boundary). Vertices are integer corner
// coordinates; collinear runs are merged.
std::vector<Vec2> trace_outer_contour(const std::vector<std::uint8_t>& member,
                                      int width, int height) {
  const auto at = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= width || y >= height) return false;
    return member[static_cast<std::size_t>(y) * width + x] != 0;
  };
  CrackEdges edges;
  edges.stride = width + 1;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (!at(x, y)) continue;
      if (!at(x, y - 1)) edges.add(x, y, 0);          // top side, heading right
      if (!at(x + 1, y)) edges.add(x + 1, y, 1);      // right side, heading down
      if (!at(x, y + 1)) edges.add(x + 1, y + 1, 2);  // bottom side, heading left
      if (!at(x - 1, y)) edges.add(x, y + 1, 3);      // left side, heading up
    }
  }

  std::vector<Vec2> best;
  double best_area = -1.0;
  while (!edges.outgoing.empty()) {
    auto start_it = edges.outgoing.begin();
    const std::int64_t start_key = start_it->first;
    int dir = 0;
    while (!start_it->second[dir]) ++dir;

    std::int64_t vx = start_key % edges.stride;
    std::int64_t vy = start_key / edges.stride;
    std::vector<Vec2> loop;
    std::int64_t cur = start_key;
    int cur_dir = dir;
    while (true) {
      auto it = edges.outgoing.find(cur);
      it->second[cur_dir] = false;
      if (std::none_of(it->second.begin(), it->second.end(),
                       [](bool b) { return b; })) {
        edges.outgoing.erase(it);
      }
      loop.emplace_back(static_cast<double>(vx), static_cast<double>(vy));
      vx += static_cast<std::int64_t>(kDirs[cur_dir].x());
      vy += static_cast<std::int64_t>(kDirs[cur_dir].y());
      cur = vy * edges.stride + vx;
      if (cur == start_key) break;
      auto next_it = edges.outgoing.find(cur);
      // Prefer the sharpest clockwise turn; this keeps the walk hugging the
      // current pixel across diagonal pinch points.
      int next_dir = -1;
      for (int cand : {(cur_dir + 1) % 4, cur_dir, (cur_dir + 3) % 4}) {
        if (next_it != edges.outgoing.end() && next_it->second[cand]) {
          next_dir = cand;
          break;
        }
      }
      if (next_dir < 0) break;  // open chain; should not happen on valid masks
      cur_dir = next_dir;
    }

    // Merge collinear runs.
    std::vector<Vec2> simple;
    const std::size_t n = loop.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2& prev = loop[(i + n - 1) % n];
      const Vec2& here = loop[i];
      const Vec2& next = loop[(i + 1) % n];
      const Vec2 d0 = here - prev;
      const Vec2 d1 = next - here;
      if (d0.x() * d1.y() - d0.y() * d1.x() != 0.0) simple.push_back(here);
    }
    const double area = std::abs(polygon_signed_area(simple));
    if (area > best_area) {
      best_area = area;
      best = std::move(simple);
    }
  }
  return best;
}

}  // namespace

std::vector<Detection> extract_detections(const SegMask& mask) {
  if (mask.width < 1 || mask.height < 1 ||
      mask.labels.size() !=
          static_cast<std::size_t>(mask.width) * mask.height) {
    throw std::invalid_argument("extract_detections: malformed mask");
  }
  // Largest 4-connected component per id.
  std::vector<std::uint8_t> visited(mask.labels.size(), 0);
  std::map<int, std::vector<int>> biggest;  // id -> pixel indices
  std::vector<int> stack;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      const int idx = y * mask.width + x;
      const int id = mask.labels[idx];
      if (id == 0 || visited[idx]) continue;
      std::vector<int> comp;
      stack.assign(1, idx);
      visited[idx] = 1;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        comp.push_back(p);
        const int px = p % mask.width;
        const int py = p / mask.width;
        const std::array<std::pair<int, int>, 4> nbrs = {
            std::pair{px + 1, py}, {px - 1, py}, {px, py + 1}, {px, py - 1}};
        for (const auto& [nx, ny] : nbrs) {
          if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height) {
            continue;
          }
          const int nidx = ny * mask.width + nx;
          if (!visited[nidx] && mask.labels[nidx] == id) {
            visited[nidx] = 1;
            stack.push_back(nidx);
          }
        }
      }
      auto& best = biggest[id];
      if (comp.size() > best.size()) best = std::move(comp);
    }
  }

  std::vector<Detection> detections;
  detections.reserve(biggest.size());
  for (const auto& [id, pixels] : biggest) {
    std::vector<std::uint8_t> member(mask.labels.size(), 0);
    for (int p : pixels) member[p] = 1;
    Detection det;
    det.id = id;
    det.pixel_count = static_cast<double>(pixels.size());
    det.contour = trace_outer_contour(member, mask.width, mask.height);
    if (det.contour.size() < 3) continue;
    det.centroid = polygon_centroid(det.contour);
    det.box = min_area_rect(det.contour);
    detections.push_back(std::move(det));
  }
  return detections;
}

// ---------------------------------------------------------------------------
// Box IoU and contour distances

namespace {

std::vector<Vec2> clip_polygon(const std::vector<Vec2>& subject,
                               const std::vector<Vec2>& clip) {
  std::vector<Vec2> output(subject.begin(), subject.end());
  const double orient = polygon_signed_area(clip) >= 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < clip.size() && !output.empty(); ++i) {
    const Vec2 a = clip[i];
    const Vec2 b = clip[(i + 1) % clip.size()];
    const Vec2 ab = b - a;
    const auto inside = [&](const Vec2& p) {
      return orient * (ab.x() * (p.y() - a.y()) - ab.y() * (p.x() - a.x())) >=
             -1e-12;
    };
    const auto intersect = [&](const Vec2& p, const Vec2& q) {
      const Vec2 pq = q - p;
      const double denom = ab.x() * pq.y() - ab.y() * pq.x();
      const double t =
          denom == 0.0
              ? 0.0
              : ((a.x() - p.x()) * ab.y() - (a.y() - p.y()) * ab.x()) / -denom;
      return Vec2(p + t * pq);
    };
    std::vector<Vec2> input;
    input.swap(output);
    for (std::size_t j = 0; j < input.size(); ++j) {
      const Vec2& cur = input[j];
      const Vec2& prev = input[(j + input.size() - 1) % input.size()];
      if (inside(cur)) {
        if (!inside(prev)) output.push_back(intersect(prev, cur));
        output.push_back(cur);
      } else if (inside(prev)) {
        output.push_back(intersect(prev, cur));
      }
    }
  }
  return output;
}

double point_segment_dist(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t =
      len2 <= 0.0 ? 0.0 : std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c,
                        const Vec2& d) {
  const auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    const double v =
        (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
  };
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4;
}

double segment_segment_dist(const Vec2& a, const Vec2& b, const Vec2& c,
                            const Vec2& d) {
  if (segments_intersect(a, b, c, d)) return 0.0;
  return std::min(std::min(point_segment_dist(a, c, d),
                           point_segment_dist(b, c, d)),
                  std::min(point_segment_dist(c, a, b),
                           point_segment_dist(d, a, b)));
}

bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x()) {
      in = !in;
    }
  }
  return in;
}

}  // namespace

double iou(const RotatedRect& a, const RotatedRect& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::vector<Vec2> pa(ca.begin(), ca.end());
  const std::vector<Vec2> pb(cb.begin(), cb.end());
  const std::vector<Vec2> inter = clip_polygon(pa, pb);
  const double inter_area =
      inter.size() < 3 ? 0.0 : std::abs(polygon_signed_area(inter));
  const double union_area = a.area() + b.area() - inter_area;
  if (union_area <= 0.0) return 0.0;
  return std::clamp(inter_area / union_area, 0.0, 1.0);
}

double min_contour_distance(const std::vector<Vec2>& a,
                            const std::vector<Vec2>& b) {
  if (a.empty() || b.empty()) {
    throw std::invalid_argument("min_contour_distance: empty contour");
  }
  if (a.size() >= 3 && point_in_polygon(b.front(), a)) return 0.0;
  if (b.size() >= 3 && point_in_polygon(a.front(), b)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Vec2& a0 = a[i];
    const Vec2& a1 = a[(i + 1) % a.size()];
    for (std::size_t j = 0; j < b.size(); ++j) {
      best = std::min(best, segment_segment_dist(a0, a1, b[j],
                                                 b[(j + 1) % b.size()]));
      if (best == 0.0) return 0.0;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Graph construction and scheduling

double edge_weight(const Detection& a, const Detection& b,
                   const GraphParams& params) {
  const double overlap = iou(a.box, b.box);
  if (overlap > params.mu_o) return overlap;
  const double d =
      min_contour_distance(a.contour, b.contour) / params.image_diagonal;
  if (d < params.mu_d) return 1.0 / std::max(d, 1e-6);
  return 0.0;
}

DeclutterGraph build_graph(const std::vector<Detection>& detections,
                           int target_id, const GraphParams& params) {
  if (detections.empty()) {
    throw std::invalid_argument("build_graph: no detections");
  }
  DeclutterGraph graph;
  graph.root = target_id;
  for (const Detection& d : detections) graph.vertices[d.id] = d;
  if (!graph.vertices.count(target_id)) {
    throw std::invalid_argument("build_graph: target not among detections");
  }

  // Pairwise weights, symmetric.
  std::map<std::pair<int, int>, double> weight;
  for (auto i = graph.vertices.begin(); i != graph.vertices.end(); ++i) {
    for (auto j = std::next(i); j != graph.vertices.end(); ++j) {
      const double w = edge_weight(i->second, j->second, params);
      if (w > 0.0) {
        weight[{i->first, j->first}] = w;
        weight[{j->first, i->first}] = w;
      }
    }
  }

  std::set<int> explored{target_id};
  while (true) {
    // One layer: every unexplored vertex adjacent to the explored set
    // attaches through its best edge into it.
    std::vector<std::pair<int, GraphEdge>> layer;
    for (const auto& [id, det] : graph.vertices) {
      (void)det;
      if (explored.count(id)) continue;
      GraphEdge best;
      for (int u : explored) {
        const auto it = weight.find({u, id});
        if (it == weight.end()) continue;
        if (best.parent < 0 || it->second > best.weight) {
          best.parent = u;
          best.weight = it->second;
        }
      }
      if (best.parent >= 0) layer.emplace_back(id, best);
    }
    if (layer.empty()) break;
    for (const auto& [id, edge] : layer) {
      graph.incoming[id] = edge;
      explored.insert(id);
    }
  }

  // Vertices unreachable through Eq.-style adjacency hang off the root.
  for (const auto& [id, det] : graph.vertices) {
    (void)det;
    if (!explored.count(id)) {
      graph.incoming[id] = GraphEdge{target_id, 1e-6, Action::kPush, false};
    }
  }
  return graph;
}

void attribute_actions(DeclutterGraph& graph, double mu_q) {
  for (auto& [child, edge] : graph.incoming) {
    const Detection& det = graph.vertices.at(child);
    edge.action =
        det.grasp_quality >= mu_q ? Action::kGrasp : Action::kPush;
    edge.action_set = true;
  }
}

std::optional<NextObject> next_object(const DeclutterGraph& graph) {
  const std::vector<int> leaves = graph.leaves();
  if (leaves.empty()) return std::nullopt;  // decluttering complete
  int best = -1;
  double best_w = -1.0;
  for (int id : leaves) {
    const double w = graph.incoming.at(id).weight;
    if (w > best_w) {
      best = id;
      best_w = w;
    }
  }
  const GraphEdge& edge = graph.incoming.at(best);
  return NextObject{best, edge.action, edge.weight};
}

// ---------------------------------------------------------------------------
// Push and grasp planning

namespace {

// First intersection of the ray (origin, dir) with the closed contour.
std::optional<Vec2> ray_contour_intersection(const Vec2& origin,
                                             const Vec2& dir,
                                             const std::vector<Vec2>& contour) {
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < contour.size(); ++i) {
    const Vec2& a = contour[i];
    const Vec2& b = contour[(i + 1) % contour.size()];
    const Vec2 seg = b - a;
    const double denom = dir.x() * seg.y() - dir.y() * seg.x();
    if (std::abs(denom) < 1e-12) continue;
    const Vec2 ao = a - origin;
    const double t = (ao.x() * seg.y() - ao.y() * seg.x()) / denom;
    const double u = (ao.x() * dir.y() - ao.y() * dir.x()) / denom;
    if (t > 1e-9 && u >= 0.0 && u <= 1.0) best_t = std::min(best_t, t);
  }
  if (!std::isfinite(best_t)) return std::nullopt;
  return Vec2(origin + best_t * dir);
}

}  // namespace

PushPlan plan_push(const SegMask& mask, int id,
                   const std::vector<Detection>& all_detections,
                   const PushParams& params, std::uint64_t seed) {
  (void)mask;
  const Detection* pushed = nullptr;
  std::vector<const Detection*> others;
  for (const Detection& d : all_detections) {
    if (d.id == id) {
      pushed = &d;
    } else {
      others.push_back(&d);
    }
  }
  if (!pushed) {
    throw std::invalid_argument("plan_push: object not among detections");
  }

  // Direction: inverse-distance weighted clutter vector, pushed away from it.
  Vec2 dir(1.0, 0.0);
  if (!others.empty()) {
    Vec2 v = Vec2::Zero();
    for (const Detection* o : others) {
      const Vec2 rel = o->centroid - pushed->centroid;
      const double dist = rel.norm();
      if (dist < 1e-9) continue;
      v += rel / dist;  // w_i = 1/|rel|, so each neighbor contributes rel/|rel|
    }
    if (v.norm() > 1e-9) dir = -v.normalized();
  }

  // Nominal contact point: the contour hit of the ray from the centroid
  // opposite to the push direction (the clutter-facing side).
  Vec2 nominal;
  const auto hit =
      ray_contour_intersection(pushed->centroid, -dir, pushed->contour);
  if (hit) {
    nominal = *hit;
  } else {
    // Centroid outside the contour (strongly concave blob): nearest contour
    // vertex to the nominal ray.
    double best = std::numeric_limits<double>::infinity();
    nominal = pushed->contour.front();
    for (const Vec2& p : pushed->contour) {
      const Vec2 rel = p - pushed->centroid;
      const double t = std::max(0.0, rel.dot(-dir));
      const double d = (rel - t * -dir).norm();
      if (d < best) {
        best = d;
        nominal = p;
      }
    }
  }

  // Candidate refinement: gripper-sized box with the least mean overlap
  // against the other objects.
  Rng rng(seed);
  std::vector<Vec2> candidates{nominal};
  const double radius = 1.5 * params.gripper_px;
  for (int i = 1; i < params.n_samples; ++i) {
    const double r = radius * std::sqrt(rng.uniform());
    const double a = 2.0 * M_PI * rng.uniform();
    candidates.push_back(nominal + r * Vec2(std::cos(a), std::sin(a)));
  }
  const double grip_angle = std::atan2(dir.y(), dir.x());
  Vec2 best_point = nominal;
  double best_score = std::numeric_limits<double>::infinity();
  double best_dist = 0.0;
  for (const Vec2& cand : candidates) {
    RotatedRect grip;
    grip.center = cand;
    grip.size = Vec2(params.gripper_px, params.gripper_px);
    grip.angle = grip_angle;
    double mean_iou = 0.0;
    for (const Detection* o : others) mean_iou += iou(grip, o->box);
    if (!others.empty()) mean_iou /= static_cast<double>(others.size());
    const double dist = (cand - nominal).norm();
    if (mean_iou < best_score - 1e-12 ||
        (std::abs(mean_iou - best_score) <= 1e-12 && dist < best_dist)) {
      best_score = mean_iou;
      best_point = cand;
      best_dist = dist;
    }
  }

  PushPlan plan;
  plan.point_px = best_point;
  plan.dir_px = dir;
  plan.distance = params.distance;
  return plan;
}

GraspPlan plan_grasp(const Detection& detection, DiscardZone& zone,
                     const std::function<geom::Vec3(const Vec2&)>& lift_px) {
  if (!detection.grasp_pose) {
    throw std::runtime_error("plan_grasp: detection has no grasp pose");
  }
  if (zone.used >= zone.slots.size()) {
    throw std::runtime_error("plan_grasp: discard zone full");
  }
  GraspPlan plan;
  plan.point = lift_px(detection.grasp_pose->pixel);
  plan.angle = detection.grasp_pose->angle;
  plan.place = zone.slots[zone.used++];
  return plan;
}

void remove_and_update(DeclutterGraph& graph, int id) {
  if (id == graph.root) {
    throw std::invalid_argument("remove_and_update: cannot remove the root");
  }
  if (!graph.vertices.count(id)) {
    throw std::invalid_argument("remove_and_update: unknown vertex");
  }
  if (!graph.is_leaf(id)) {
    throw std::invalid_argument("remove_and_update: vertex is not a leaf");
  }
  graph.vertices.erase(id);
  graph.incoming.erase(id);
}

}  // namespace avtp::declutter
