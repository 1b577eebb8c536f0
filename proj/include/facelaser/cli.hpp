#pragma once

// Subcommand implementations behind the facelaser executable. Each command
// reads its inputs, writes fixed file names into the output directory and
// returns a one-line summary.

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "facelaser/config.hpp"
#include "facelaser/coverage.hpp"
#include "facelaser/io.hpp"
#include "facelaser/pathplan.hpp"
#include "facelaser/ply.hpp"
#include "facelaser/registration.hpp"
#include "facelaser/segmentation.hpp"
#include "facelaser/simulator.hpp"

namespace facelaser::cli {

/// Bad invocation: missing input files, inconsistent argument counts.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;  // key=value, value parsed as JSON
  std::string out_dir = ".";
};

inline void require_file(const std::string& path, const char* what) {
  if (path.empty() || !std::filesystem::is_regular_file(path)) {
    throw UsageError(std::string(what) + " not found: " + (path.empty() ? "<none>" : path));
  }
}

/// Config file first, then --set overrides, then --seed.
inline RunConfig load_config(const GlobalOptions& g) {
  Json j = Json::object();
  if (!g.config_path.empty()) {
    require_file(g.config_path, "config file");
    j = load_json(g.config_path);
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  }
  for (const auto& kv : g.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw UsageError("--set expects key=value, got " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string value = kv.substr(eq + 1);
    try {
      j[key] = Json::parse(value);
    } catch (const Json::parse_error&) {
      j[key] = value;
    }
  }
  if (g.seed) j["seed"] = *g.seed;
  return config_from_json(j);
}

inline std::filesystem::path out_path(const GlobalOptions& g, const std::string& name) {
  std::filesystem::create_directories(g.out_dir);
  return std::filesystem::path(g.out_dir) / name;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---- register ----

inline std::string cmd_register(const GlobalOptions& g, const std::vector<std::string>& views,
                                const std::string& poses_path) {
  if (views.empty()) throw UsageError("register needs at least one view");
  for (const auto& v : views) require_file(v, "view cloud");
  const RunConfig cfg = load_config(g);

  std::vector<PointCloud> clouds;
  for (const auto& v : views) clouds.push_back(load_ply(v));
  std::vector<RigidTransform> poses;
  if (poses_path.empty()) {
    if (views.size() > 1) throw UsageError("register with several views needs --poses");
    poses.push_back(RigidTransform::identity());
  } else {
    require_file(poses_path, "poses file");
    poses = poses_from_json(load_json(poses_path));
  }
  if (poses.size() != clouds.size()) {
    throw UsageError("got " + std::to_string(clouds.size()) + " views but " + std::to_string(poses.size()) + " poses");
  }

  const MergeResult merged = merge_views(clouds, poses, cfg.merge());
  save_ply(merged.cloud, out_path(g, "merged.ply").string());

  Json reports = Json::array();
  for (const auto& r : merged.reports) {
    reports.push_back(Json{{"view", r.view},
                           {"rmse_before_m", r.rmse_before},
                           {"rmse_m", r.icp.rmse},
                           {"iterations", r.icp.iterations},
                           {"converged", r.icp.converged},
                           {"correspondences", r.icp.correspondences}});
  }
  write_text_file(out_path(g, "registration_report.json").string(),
                  dump(Json{{"views", views.size()}, {"merged_points", merged.cloud.size()}, {"pairs", reports}}));
  return "merged " + std::to_string(views.size()) + " views into " + std::to_string(merged.cloud.size()) + " points";
}

// ---- segment ----

inline PointCloud crop(const PointCloud& cloud, const std::array<double, 6>& box) {
  PointCloud out = cloud;
  out.points.clear();
  for (const auto& p : cloud.points) {
    const Vec3& x = p.position;
    if (x.x() >= box[0] && x.y() >= box[1] && x.z() >= box[2] && x.x() <= box[3] && x.y() <= box[4] &&
        x.z() <= box[5]) {
      out.points.push_back(p);
    }
  }
  return out;
}

inline std::string cmd_segment(const GlobalOptions& g, const std::string& cloud_path, const std::string& landmarks_path,
                               const std::string& camera_path, const std::string& polygons_path,
                               const std::optional<std::array<double, 6>>& crop_box) {
  require_file(cloud_path, "cloud");
  require_file(landmarks_path, "landmarks file");
  require_file(camera_path, "camera file");
  if (!polygons_path.empty()) require_file(polygons_path, "polygon override file");
  const RunConfig cfg = load_config(g);

  PointCloud cloud = load_ply(cloud_path);
  if (crop_box) cloud = crop(cloud, *crop_box);
  const FaceLandmarks lm = landmarks_from_json(load_json(landmarks_path));
  const CameraModel cam = camera_from_json(load_json(camera_path));
  auto polys = build_region_polygons(lm, cfg.segmentation());
  if (!polygons_path.empty()) apply_polygon_overrides(polys, load_json(polygons_path));

  const SegmentedFace seg = segment_face(cloud, polys, cam.intrinsics, cam.extrinsics);

  Json counts = Json::object();
  Json empty = Json::array();
  std::size_t total = seg.residual.size();
  for (RegionLabel l : kAllRegions) {
    const PointCloud& r = seg.regions.at(l);
    save_ply(r, out_path(g, std::string(to_string(l)) + ".ply").string());
    counts[to_string(l)] = r.size();
    total += r.size();
    if (r.empty()) empty.push_back(to_string(l));
  }
  save_ply(seg.residual, out_path(g, "residual.ply").string());
  counts["residual"] = seg.residual.size();

  std::size_t assigned = 0;
  for (int a : seg.assignment) assigned += a >= 0 ? 1 : 0;
  const bool disjoint = assigned + seg.residual.size() == cloud.size();
  Json report{{"input_points", cloud.size()},
              {"counts", counts},
              {"empty_regions", empty},
              {"disjoint", disjoint},
              {"union_complete", total == cloud.size()}};
  write_text_file(out_path(g, "segmentation_report.json").string(), dump(report));
  return "segmented " + std::to_string(cloud.size()) + " points, " + std::to_string(seg.residual.size()) + " residual";
}

// ---- plan ----

inline std::string cmd_plan(const GlobalOptions& g, const std::vector<std::string>& regions) {
  if (regions.empty()) throw UsageError("plan needs at least one region cloud");
  for (const auto& r : regions) require_file(r, "region cloud");
  const RunConfig cfg = load_config(g);
  const PlannerConfig pc = cfg.planner();
  const Vec3 axis = cfg.camera_axis.normalized();

  std::vector<SegmentPath> paths;
  Json segs = Json::array();
  Json skipped = Json::array();
  for (const auto& file : regions) {
    const std::string label = std::filesystem::path(file).stem().string();
    PointCloud cloud = load_ply(file);
    if (cloud.empty()) {
      skipped.push_back(label);
      continue;
    }
    if (!cloud.has_normals) {
      cloud = estimate_normals(cloud, static_cast<std::size_t>(cfg.normal_neighbors), Vec3::Zero());
    }
    SegmentPath p = plan_segment(cloud, pc, axis, label);
    segs.push_back(Json{{"label", label},
                        {"orientation", p.orientation == StripOrientation::vertical ? "vertical" : "horizontal"},
                        {"points", p.points.size()},
                        {"strips", p.strip_widths.size()},
                        {"strip_widths_m", p.strip_widths}});
    paths.push_back(std::move(p));
  }
  write_text_file(out_path(g, "paths.json").string(), dump(paths_to_json(paths)));
  write_text_file(out_path(g, "paths.svg").string(), paths_to_svg(paths, cfg.laser_diameter_m));
  write_text_file(out_path(g, "plan_report.json").string(),
                  dump(Json{{"segments", segs}, {"skipped_empty", skipped}, {"max_speed_m_s", max_speed(pc)}}));
  std::size_t n = 0;
  for (const auto& p : paths) n += p.points.size();
  return "planned " + std::to_string(paths.size()) + " segments, " + std::to_string(n) + " path points";
}

// ---- simulate / report ----

struct RegionOptions {
  std::string region_ply;
  std::optional<std::array<double, 4>> rect;  // x0 y0 x1 y1 in the camera x-y plane
};

inline CoverageReport region_coverage(const ShotLog& log, const std::vector<Vec3>& extent_points,
                                      const RegionOptions& ro, const RunConfig& cfg) {
  const double d = cfg.laser_diameter_m;
  if (!ro.region_ply.empty()) {
    const PointCloud region = load_ply(ro.region_ply);
    return coverage_metrics(log, region, d, cfg.voxel_leaf_m * cfg.voxel_leaf_m, cfg.mc_samples, cfg.seed);
  }
  double z = 0.0;
  for (const auto& e : log.shots) z += e.psi.position.z();
  z /= static_cast<double>(log.shots.size());
  RigidTransform frame;
  frame.translation = Vec3(0.0, 0.0, z);
  if (ro.rect) {
    const auto& r = *ro.rect;
    return coverage_metrics(log, rectangle_region(frame, r[0], r[1], r[2], r[3]), d, cfg.mc_samples, cfg.seed);
  }
  double x0 = extent_points.front().x(), x1 = x0, y0 = extent_points.front().y(), y1 = y0;
  for (const auto& p : extent_points) {
    x0 = std::min(x0, p.x());
    x1 = std::max(x1, p.x());
    y0 = std::min(y0, p.y());
    y1 = std::max(y1, p.y());
  }
  const double r = 0.5 * d;
  return coverage_metrics(log, rectangle_region(frame, x0 - r, y0 - r, x1 + r, y1 + r), d, cfg.mc_samples, cfg.seed);
}

inline std::string cmd_simulate(const GlobalOptions& g, const std::string& paths_path, const std::string& face_path,
                                const std::string& motion_path, const RegionOptions& ro) {
  require_file(paths_path, "paths file");
  if (!face_path.empty()) require_file(face_path, "face cloud");
  if (!motion_path.empty()) require_file(motion_path, "motion script");
  if (!ro.region_ply.empty()) require_file(ro.region_ply, "region cloud");
  const RunConfig cfg = load_config(g);

  const std::vector<SegmentPath> paths = paths_from_json(load_json(paths_path));
  std::optional<PointCloud> face;
  if (!face_path.empty()) face = load_ply(face_path);
  std::optional<MotionScript> motion;
  if (!motion_path.empty()) motion = motion_from_json(load_json(motion_path));
  const SensorRig rig = cfg.rig();

  SimScene scene;
  if (face) {
    scene.face = &*face;
    scene.rig = &rig;
  }
  if (motion) scene.motion = &*motion;
  const SimulationResult sim = run_path(paths, cfg.simulation(), scene);
  if (sim.log.shots.empty()) throw Error(ErrorCode::EmptyLog, "simulation produced no shots");

  std::vector<Vec3> extent;
  for (const auto& p : paths) {
    for (const auto& q : p.points) extent.push_back(q.chi);
  }
  const CoverageReport cov = region_coverage(sim.log, extent, ro, cfg);

  write_text_file(out_path(g, "shots.csv").string(), shots_to_csv(sim.log));
  write_text_file(out_path(g, "trajectory.csv").string(), trajectory_to_csv(sim.trajectory));
  write_text_file(out_path(g, "shots.svg").string(), shots_to_svg(paths, sim.log, cfg.laser_diameter_m));
  Json report = coverage_to_json(cov);
  report["skipped_targets"] = sim.skipped_targets;
  report["reanchors"] = sim.reanchors;
  report["min_sensor_distance_m"] = std::isfinite(sim.min_distance) ? Json(sim.min_distance) : Json(nullptr);
  report["timed_out"] = sim.timed_out;
  write_text_file(out_path(g, "coverage.json").string(), dump(report));
  return "N_t=" + std::to_string(cov.n_shots) + " d=" + format_double(cov.path_length) +
         " mu=" + format_double(cov.mean_spacing) + " var=" + format_double(cov.spacing_variance) +
         " phi=" + format_double(cov.coverage);
}

inline std::string cmd_report(const GlobalOptions& g, const std::string& shots_path, const std::string& trajectory_path,
                              const RegionOptions& ro) {
  require_file(shots_path, "shot log");
  if (!trajectory_path.empty()) require_file(trajectory_path, "trajectory file");
  if (!ro.region_ply.empty()) require_file(ro.region_ply, "region cloud");
  const RunConfig cfg = load_config(g);

  ShotLog log = shots_from_csv(read_text_file(shots_path));
  if (log.shots.empty()) throw Error(ErrorCode::EmptyLog, "shot log is empty");
  if (!trajectory_path.empty()) log.path_length = trajectory_length_from_csv(read_text_file(trajectory_path));
  std::vector<Vec3> extent;
  for (const auto& e : log.shots) extent.push_back(e.psi.position);
  const CoverageReport cov = region_coverage(log, extent, ro, cfg);
  const std::string text = dump(coverage_to_json(cov));
  write_text_file(out_path(g, "report.json").string(), text);
  return text;
}

}  // namespace facelaser::cli
