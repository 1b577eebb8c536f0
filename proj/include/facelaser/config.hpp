#pragma once

// Run configuration: a flat JSON object whose keys carry their units.

#include <cmath>
#include <cstdint>
#include <string>

#include <json.hpp>

#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/pathplan.hpp"
#include "facelaser/registration.hpp"
#include "facelaser/segmentation.hpp"
#include "facelaser/simulator.hpp"

namespace facelaser {

struct RunConfig {
  double laser_diameter_m = 0.004;
  double pulse_rate_hz = 5.0;
  double speed_m_s = 0.0;  // 0: laser_diameter * pulse_rate
  double d_min_m = 0.25;
  double l_min_m = 0.03;
  double kappa = 1e-4;
  double voxel_leaf_m = 0.002;
  double phi_step_deg = 15.0;
  int n_per_side = 2;
  std::uint64_t seed = 1;
  std::string viewpoint_arc_model = "circular";
  double control_rate_hz = 125.0;
  double sample_jitter = 0.5;
  std::uint64_t mc_samples = 1000000;
  double sensor_radius_m = 0.025;
  double sensor_standoff_m = 0.05;
  double sensor_max_range_m = 0.2;
  double raycast_radius_m = 0.002;
  std::string obliquity_model = "surface_pitch";
  double max_obliquity_deg = 80.0;
  std::string orientation = "auto";
  Vec3 camera_axis = Vec3::UnitZ();
  int icp_max_iterations = 50;
  double icp_tolerance = 1e-6;
  double icp_gate_m = 0.0;  // 0: ten voxel leaves
  int normal_neighbors = 12;
  double forehead_extension = 0.6;
  double stall_timeout_s = 0.5;
  double dead_band_translation_m = 0.003;
  double dead_band_rotation_deg = 4.0;

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::InvalidParam, std::string(name) + " must be positive");
    };
    positive(laser_diameter_m, "laser_diameter_m");
    positive(pulse_rate_hz, "pulse_rate_hz");
    positive(d_min_m, "d_min_m");
    positive(l_min_m, "l_min_m");
    positive(kappa, "kappa");
    positive(voxel_leaf_m, "voxel_leaf_m");
    positive(phi_step_deg, "phi_step_deg");
    positive(control_rate_hz, "control_rate_hz");
    positive(sensor_radius_m, "sensor_radius_m");
    positive(sensor_max_range_m, "sensor_max_range_m");
    positive(raycast_radius_m, "raycast_radius_m");
    positive(icp_tolerance, "icp_tolerance");
    positive(forehead_extension, "forehead_extension");
    positive(stall_timeout_s, "stall_timeout_s");
    if (speed_m_s < 0.0 || speed_m_s > laser_diameter_m * pulse_rate_hz * (1.0 + 1e-12)) {
      throw Error(ErrorCode::InvalidParam, "speed_m_s must lie in [0, laser_diameter_m * pulse_rate_hz]");
    }
    if (sensor_standoff_m < 0.0 || icp_gate_m < 0.0 || dead_band_translation_m < 0.0 || dead_band_rotation_deg < 0.0) {
      throw Error(ErrorCode::InvalidParam, "negative distance or angle in config");
    }
    if (!(sample_jitter >= 0.0 && sample_jitter < 1.0)) throw Error(ErrorCode::InvalidParam, "sample_jitter must lie in [0, 1)");
    if (n_per_side < 0 || icp_max_iterations < 0 || normal_neighbors < 3 || mc_samples == 0) {
      throw Error(ErrorCode::InvalidParam, "count parameter out of range");
    }
    if (!(max_obliquity_deg >= 0.0 && max_obliquity_deg < 90.0)) {
      throw Error(ErrorCode::InvalidParam, "max_obliquity_deg must lie in [0, 90)");
    }
    if (camera_axis.norm() < 1e-9) throw Error(ErrorCode::InvalidParam, "camera_axis must be non-zero");
    static_cast<void>(arc_model());
    static_cast<void>(obliquity());
    static_cast<void>(strip_orientation());
  }

  [[nodiscard]] ViewpointArcModel arc_model() const {
    if (viewpoint_arc_model == "circular") return ViewpointArcModel::circular;
    if (viewpoint_arc_model == "as_printed") return ViewpointArcModel::as_printed;
    throw Error(ErrorCode::InvalidParam, "viewpoint_arc_model must be circular or as_printed");
  }

  [[nodiscard]] ObliquityModel obliquity() const {
    if (obliquity_model == "surface_pitch") return ObliquityModel::surface_pitch;
    if (obliquity_model == "as_printed") return ObliquityModel::as_printed;
    if (obliquity_model == "none") return ObliquityModel::none;
    throw Error(ErrorCode::InvalidParam, "obliquity_model must be surface_pitch, as_printed or none");
  }

  [[nodiscard]] StripOrientation strip_orientation() const {
    if (orientation == "auto") return StripOrientation::automatic;
    if (orientation == "horizontal") return StripOrientation::horizontal;
    if (orientation == "vertical") return StripOrientation::vertical;
    throw Error(ErrorCode::InvalidParam, "orientation must be auto, horizontal or vertical");
  }

  [[nodiscard]] PlannerConfig planner() const {
    PlannerConfig p;
    p.laser_diameter = laser_diameter_m;
    p.pulse_rate = pulse_rate_hz;
    p.orientation = strip_orientation();
    p.obliquity = obliquity();
    p.max_obliquity = deg_to_rad(max_obliquity_deg);
    return p;
  }

  [[nodiscard]] SimConfig simulation() const {
    SimConfig s;
    s.laser_diameter = laser_diameter_m;
    s.pulse_rate = pulse_rate_hz;
    s.speed = speed_m_s;
    s.control_rate = control_rate_hz;
    s.sample_jitter = sample_jitter;
    s.seed = seed;
    s.stall_timeout = stall_timeout_s;
    s.dead_band_translation = dead_band_translation_m;
    s.dead_band_rotation = deg_to_rad(dead_band_rotation_deg);
    return s;
  }

  [[nodiscard]] SensorRig rig() const {
    return make_sensor_rig(sensor_radius_m, sensor_standoff_m, sensor_max_range_m, l_min_m, kappa, raycast_radius_m);
  }

  [[nodiscard]] MergeOptions merge() const {
    MergeOptions m;
    m.leaf = voxel_leaf_m;
    m.icp.max_iterations = icp_max_iterations;
    m.icp.tolerance = icp_tolerance;
    m.icp.max_correspondence = icp_gate_m > 0.0 ? icp_gate_m : 10.0 * voxel_leaf_m;
    m.normal_neighbors = static_cast<std::size_t>(normal_neighbors);
    return m;
  }

  [[nodiscard]] SegmentationOptions segmentation() const { return {forehead_extension}; }
};

namespace config_detail {

template <typename Fn>
void for_each_field(RunConfig& c, Fn&& fn) {
  fn("laser_diameter_m", c.laser_diameter_m);
  fn("pulse_rate_hz", c.pulse_rate_hz);
  fn("speed_m_s", c.speed_m_s);
  fn("d_min_m", c.d_min_m);
  fn("l_min_m", c.l_min_m);
  fn("kappa", c.kappa);
  fn("voxel_leaf_m", c.voxel_leaf_m);
  fn("phi_step_deg", c.phi_step_deg);
  fn("n_per_side", c.n_per_side);
  fn("seed", c.seed);
  fn("viewpoint_arc_model", c.viewpoint_arc_model);
  fn("control_rate_hz", c.control_rate_hz);
  fn("sample_jitter", c.sample_jitter);
  fn("mc_samples", c.mc_samples);
  fn("sensor_radius_m", c.sensor_radius_m);
  fn("sensor_standoff_m", c.sensor_standoff_m);
  fn("sensor_max_range_m", c.sensor_max_range_m);
  fn("raycast_radius_m", c.raycast_radius_m);
  fn("obliquity_model", c.obliquity_model);
  fn("max_obliquity_deg", c.max_obliquity_deg);
  fn("orientation", c.orientation);
  fn("camera_axis", c.camera_axis);
  fn("icp_max_iterations", c.icp_max_iterations);
  fn("icp_tolerance", c.icp_tolerance);
  fn("icp_gate_m", c.icp_gate_m);
  fn("normal_neighbors", c.normal_neighbors);
  fn("forehead_extension", c.forehead_extension);
  fn("stall_timeout_s", c.stall_timeout_s);
  fn("dead_band_translation_m", c.dead_band_translation_m);
  fn("dead_band_rotation_deg", c.dead_band_rotation_deg);
}

inline void read_value(const nlohmann::json& j, const std::string& key, double& out) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, key + " must be a number");
  out = j.get<double>();
}
inline void read_value(const nlohmann::json& j, const std::string& key, int& out) {
  if (!j.is_number_integer()) throw Error(ErrorCode::ParseError, key + " must be an integer");
  out = j.get<int>();
}
inline void read_value(const nlohmann::json& j, const std::string& key, std::uint64_t& out) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0)) {
    throw Error(ErrorCode::ParseError, key + " must be a non-negative integer");
  }
  out = j.get<std::uint64_t>();
}
inline void read_value(const nlohmann::json& j, const std::string& key, std::string& out) {
  if (!j.is_string()) throw Error(ErrorCode::ParseError, key + " must be a string");
  out = j.get<std::string>();
}
inline void read_value(const nlohmann::json& j, const std::string& key, Vec3& out) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() || !j[2].is_number()) {
    throw Error(ErrorCode::ParseError, key + " must be an array of 3 numbers");
  }
  out = Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline nlohmann::json write_value(double v) { return v; }
inline nlohmann::json write_value(int v) { return v; }
inline nlohmann::json write_value(std::uint64_t v) { return v; }
inline nlohmann::json write_value(const std::string& v) { return v; }
inline nlohmann::json write_value(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

}  // namespace config_detail

/// Overlays the keys present in `j` on `base`. Unknown keys are rejected.
inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
  std::size_t matched = 0;
  config_detail::for_each_field(base, [&](const char* key, auto& field) {
    if (j.contains(key)) {
      config_detail::read_value(j.at(key), key, field);
      ++matched;
    }
  });
  if (matched != j.size()) {
    RunConfig probe;
    for (const auto& [key, value] : j.items()) {
      bool known = false;
      config_detail::for_each_field(probe, [&](const char* k, auto&) { known = known || key == k; });
      if (!known) throw Error(ErrorCode::InvalidParam, "unknown config key \"" + key + "\"");
    }
  }
  base.validate();
  return base;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j = nlohmann::json::object();
  RunConfig copy = c;
  config_detail::for_each_field(copy, [&](const char* key, auto& field) { j[key] = config_detail::write_value(field); });
  return j;
}

}  // namespace facelaser
