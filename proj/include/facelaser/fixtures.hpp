#pragma once

// Synthetic scenario files: a head cloud with landmarks and camera, two scan
// views with poses, a 47 mm square patch, straight-line spacing runs, an
// intrusion path and a head motion script.

#include <filesystem>
#include <string>

#include "facelaser/config.hpp"
#include "facelaser/io.hpp"
#include "facelaser/ply.hpp"
#include "facelaser/synthetic.hpp"

namespace facelaser {

inline void write_fixtures(const std::string& dir) {
  std::filesystem::create_directories(dir);
  auto at = [&](const std::string& name) { return (std::filesystem::path(dir) / name).string(); };

  const PointCloud head = synthetic_head();
  save_ply(head, at("head.ply"));
  write_text_file(at("landmarks.json"), landmarks_to_json(canonical_landmarks()).dump(2) + "\n");
  write_text_file(at("camera.json"), camera_to_json({synthetic_camera(), {}}).dump(2) + "\n");

  // Second view: the camera swung 15 degrees about the head's vertical axis.
  const Vec3 c(0.0, 0.0, kHeadDepth);
  const RigidTransform swing{rot_y(deg_to_rad(15.0)), c - rot_y(deg_to_rad(15.0)) * c};
  const PointCloud full = ellipsoid_surface(Vec3(0.075, 0.10, 0.09), c, 40000);
  const PointCloud view1 = transformed(visible_from(full, swing.translation), invert(swing));
  save_ply(head, at("view0.ply"));
  save_ply(view1, at("view1.ply"));
  Json poses = Json::array({transform_to_json(RigidTransform::identity()), transform_to_json(swing)});
  write_text_file(at("poses.json"), poses.dump(2) + "\n");

  RigidTransform patch_pose;
  patch_pose.translation = Vec3(0.0, 0.0, 0.4);
  save_ply(planar_grid(48, 48, 0.001, patch_pose), at("patch47.ply"));

  const double diam[3] = {0.01, 0.005, 0.002};
  const double len[3] = {0.111, 0.131, 0.146};
  for (int k = 0; k < 3; ++k) {
    const std::string name = "sdt" + std::to_string(k + 1);
    const auto line = straight_path(Vec3(0, 0, 0.4), Vec3(len[k], 0, 0.4), 0.001, Vec3::UnitZ(), name);
    write_text_file(at(name + "_paths.json"), paths_to_json({line}).dump(2) + "\n");
    RunConfig cfg;
    cfg.laser_diameter_m = diam[k];
    cfg.pulse_rate_hz = 10.0;
    cfg.speed_m_s = 0.016;
    write_text_file(at(name + "_config.json"), config_to_json(cfg).dump(2) + "\n");
  }

  const Vec3 tip(0.0, 0.0, kHeadDepth - 0.09);
  write_text_file(at("intrusion_paths.json"),
                  paths_to_json({intrusion_path(tip, Vec3::UnitZ(), 0.04, 3)}).dump(2) + "\n");

  MotionScript motion;
  motion.keys = {{0.0, Vec3::Zero(), Vec3::Zero()},
                 {2.0, Vec3(0.002, 0.0, 0.0), Vec3::Zero()},
                 {4.0, Vec3(0.010, 0.0, 0.0), Vec3(0.0, deg_to_rad(10.0), 0.0)}};
  write_text_file(at("motion.json"), motion_to_json(motion).dump(2) + "\n");
  write_text_file(at("config.json"), config_to_json(RunConfig{}).dump(2) + "\n");
}

}  // namespace facelaser
