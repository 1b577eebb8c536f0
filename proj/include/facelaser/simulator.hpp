#pragma once

// Discrete-time execution of pose commands: constant-speed following,
// distance-impulse laser triggering, head-motion re-anchoring with a
// dead-band, and potential-field repulsion from virtual range sensors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "facelaser/cloud.hpp"
#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/pathplan.hpp"

namespace facelaser {

struct SimConfig {
  double laser_diameter = 0.004;  // m
  double pulse_rate = 5.0;        // Hz
  double speed = 0.0;             // m/s; 0 selects the maximum laser_diameter * pulse_rate
  double control_rate = 125.0;    // Hz
  double sample_jitter = 0.5;     // relative half-width of the tick period spread
  std::uint64_t seed = 1;
  double stall_timeout = 0.5;               // s without progress before a target is dropped
  double dead_band_translation = 0.003;     // m
  double dead_band_rotation = deg_to_rad(4.0);
  double max_time = 3600.0;                 // s of simulated time

  void validate() const {
    if (!(laser_diameter > 0.0) || !(pulse_rate > 0.0)) {
      throw Error(ErrorCode::InvalidParam, "laser diameter and pulse rate must be positive");
    }
    if (speed < 0.0 || speed > laser_diameter * pulse_rate * (1.0 + 1e-12)) {
      throw Error(ErrorCode::InvalidParam, "speed must lie in [0, laser_diameter * pulse_rate]");
    }
    if (!(control_rate > 0.0)) throw Error(ErrorCode::InvalidParam, "control rate must be positive");
    if (!(sample_jitter >= 0.0 && sample_jitter < 1.0)) {
      throw Error(ErrorCode::InvalidParam, "sample jitter must lie in [0, 1)");
    }
    if (!(stall_timeout > 0.0) || !(max_time > 0.0)) {
      throw Error(ErrorCode::InvalidParam, "stall timeout and max time must be positive");
    }
    if (dead_band_translation < 0.0 || dead_band_rotation < 0.0) {
      throw Error(ErrorCode::InvalidParam, "dead-band must be non-negative");
    }
  }
};

inline double max_speed(const SimConfig& cfg) { return cfg.laser_diameter * cfg.pulse_rate; }

struct EffectorState {
  PoseVector6 pose;
  double speed = 0.0;    // commanded, m/s
  double time = 0.0;     // s
  double delta_d = 0.0;  // m travelled since the last shot
  bool laser_armed = false;
};

struct ShotEvent {
  PoseVector6 psi;
  double time = 0.0;
  int index = 0;
  int strip = 0;
  std::string segment;
};

struct ShotLog {
  std::vector<ShotEvent> shots;
  double path_length = 0.0;  // m travelled by the effector over the run
};

namespace sim_detail {

// Moves at most `travel` metres towards the target; the orientation follows
// the same fraction along the geodesic. Returns the distance moved.
inline double advance(EffectorState& s, const PoseVector6& target, double travel) {
  const Vec3 gap = target.position - s.pose.position;
  const double dist = gap.norm();
  if (dist <= travel + 1e-12) {
    s.pose = target;
    s.delta_d += dist;
    return dist;
  }
  const double frac = travel / dist;
  const Mat3 r_cur = axis_angle_to_rotation(s.pose.orientation);
  const Mat3 r_tgt = axis_angle_to_rotation(target.orientation);
  const Vec3 rel = rotation_to_axis_angle(r_cur.transpose() * r_tgt);
  s.pose.position += frac * gap;
  s.pose.orientation = rotation_to_axis_angle(r_cur * axis_angle_to_rotation(frac * rel));
  s.delta_d += travel;
  return travel;
}

}  // namespace sim_detail

/// One control tick of duration dt towards `target` at min(speed, max).
inline EffectorState step(const EffectorState& state, const PoseVector6& target, double dt, const SimConfig& cfg) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidParam, "dt must be positive");
  EffectorState s = state;
  const double v = std::clamp(state.speed, 0.0, max_speed(cfg));
  sim_detail::advance(s, target, v * dt);
  s.time += dt;
  return s;
}

struct TriggerResult {
  bool fired = false;
  EffectorState state;
};

/// Fires when armed and the distance since the last shot reaches the laser
/// diameter; the counter then restarts from zero.
inline TriggerResult laser_trigger(const EffectorState& state, const SimConfig& cfg) {
  TriggerResult r{false, state};
  if (state.laser_armed && state.delta_d >= cfg.laser_diameter) {
    r.fired = true;
    r.state.delta_d = 0.0;
  }
  return r;
}

struct SensorRig {
  std::vector<RigidTransform> mounts;  // sensor frames in the effector frame; rays along +z
  double max_range = 0.2;              // m
  double l_min = 0.03;                 // m
  double kappa = 1e-4;
  double ray_radius = 0.002;           // m, cylinder around each ray

  void validate() const {
    if (mounts.empty()) throw Error(ErrorCode::InvalidParam, "sensor rig has no mounts");
    if (!(l_min > 0.0) || !(kappa > 0.0) || !(max_range > 0.0) || !(ray_radius > 0.0)) {
      throw Error(ErrorCode::InvalidParam, "sensor rig parameters must be positive");
    }
  }
};

/// Three rays parallel to the tool axis at 120 degree spacing on a circle of
/// `radius`, mounted `standoff` behind the tool point.
inline SensorRig make_sensor_rig(double radius = 0.025, double standoff = 0.05, double max_range = 0.2,
                                 double l_min = 0.03, double kappa = 1e-4, double ray_radius = 0.002) {
  SensorRig rig;
  for (int k = 0; k < 3; ++k) {
    const double a = kPi / 2.0 + k * 2.0 * kPi / 3.0;
    RigidTransform m;
    m.translation = Vec3(radius * std::cos(a), radius * std::sin(a), -standoff);
    rig.mounts.push_back(m);
  }
  rig.max_range = max_range;
  rig.l_min = l_min;
  rig.kappa = kappa;
  rig.ray_radius = ray_radius;
  return rig;
}

struct FusedReading {
  Vec3 l = Vec3::Zero();  // world frame, sensor towards surface
  int hits = 0;
};

/// Weighted mean of the per-sensor range vectors, each weighted by the
/// cosine between the ray and the surface normal at its hit. Normals are
/// taken in the sign that makes the weight non-negative. Rays that miss are
/// left out of both sums; nullopt when every ray misses.
inline std::optional<FusedReading> sensor_fusion(const SensorRig& rig, const RigidTransform& effector,
                                                 const CloudIndex& face,
                                                 const RigidTransform& face_pose = RigidTransform::identity()) {
  const RigidTransform to_face = invert(face_pose);
  Vec3 weighted = Vec3::Zero();
  Vec3 plain = Vec3::Zero();
  double weight_sum = 0.0;
  int hits = 0;
  for (const auto& mount : rig.mounts) {
    const RigidTransform sensor = compose(effector, mount);
    const Vec3 origin = sensor.translation;
    const Vec3 dir = sensor.rotation.col(2).normalized();
    const auto hit = raycast(face, to_face.apply(origin), to_face.apply_direction(dir), rig.ray_radius,
                             rig.max_range);
    if (!hit) continue;
    const Vec3 l_m = face_pose.apply(hit->point) - origin;
    const Vec3 n = face_pose.apply_direction(hit->normal);
    const double denom = l_m.norm() * n.norm();
    const double w = denom > 0.0 ? std::abs(l_m.dot(n)) / denom : 0.0;
    weighted += w * l_m;
    plain += l_m;
    weight_sum += w;
    ++hits;
  }
  if (hits == 0) return std::nullopt;
  FusedReading r;
  r.hits = hits;
  r.l = weight_sum > 1e-12 ? Vec3(weighted / weight_sum) : Vec3(plain / hits);
  return r;
}

/// U = 0.5 (1/l_min - 1/D)^2 inside the danger zone, 0 outside.
inline double repulsive_potential(double distance, double l_min) {
  if (distance > l_min) return 0.0;
  const double a = 1.0 / l_min - 1.0 / distance;
  return 0.5 * a * a;
}

/// kappa * F with F = -grad U over the effector position. D = |l| where l
/// points from the effector to the surface, so grad D = -l/|l| and the
/// resulting velocity points away from the surface.
inline Vec3 repulsive_velocity(const Vec3& l, const SensorRig& rig) {
  const double d = l.norm();
  if (d <= 1e-6) throw Error(ErrorCode::ContactError, "effector in contact with the surface");
  if (d > rig.l_min) return Vec3::Zero();
  const Vec3 grad_d = -l / d;
  const Vec3 grad_u = (1.0 / rig.l_min - 1.0 / d) / (d * d) * grad_d;
  return -rig.kappa * grad_u;
}

/// Piecewise-linear head pose timeline: translation interpolated linearly,
/// rotation along the geodesic between keyframes, held outside the range.
struct MotionKeyframe {
  double t = 0.0;
  Vec3 translation = Vec3::Zero();
  Vec3 axis_angle = Vec3::Zero();
};

struct MotionScript {
  std::vector<MotionKeyframe> keys;

  void validate() const {
    for (std::size_t i = 1; i < keys.size(); ++i) {
      if (!(keys[i].t > keys[i - 1].t)) throw Error(ErrorCode::InvalidParam, "motion keyframes must increase in time");
    }
  }

  [[nodiscard]] RigidTransform at(double t) const {
    if (keys.empty()) return RigidTransform::identity();
    auto pose = [](const MotionKeyframe& k) { return RigidTransform{axis_angle_to_rotation(k.axis_angle), k.translation}; };
    if (t <= keys.front().t) return pose(keys.front());
    if (t >= keys.back().t) return pose(keys.back());
    const auto it = std::upper_bound(keys.begin(), keys.end(), t,
                                     [](double v, const MotionKeyframe& k) { return v < k.t; });
    const MotionKeyframe& b = *it;
    const MotionKeyframe& a = *(it - 1);
    const double s = (t - a.t) / (b.t - a.t);
    const Mat3 ra = axis_angle_to_rotation(a.axis_angle);
    const Mat3 rb = axis_angle_to_rotation(b.axis_angle);
    const Vec3 rel = rotation_to_axis_angle(ra.transpose() * rb);
    return {ra * axis_angle_to_rotation(s * rel), (1.0 - s) * a.translation + s * b.translation};
  }
};

struct DeadBand {
  double translation = 0.003;
  double rotation = deg_to_rad(4.0);
};

/// True when the head moved beyond the dead-band between the two poses.
inline bool exceeds_dead_band(const RigidTransform& old_pose, const RigidTransform& new_pose, const DeadBand& band) {
  const double dt = (new_pose.translation - old_pose.translation).norm();
  const double dr = rotation_angle(new_pose.rotation * old_pose.rotation.transpose());
  return dt > band.translation || dr > band.rotation;
}

inline void reanchor(std::vector<PathPoint>& points, const RigidTransform& m) {
  for (auto& p : points) {
    p.chi = m.apply(p.chi);
    p.eta = m.apply_direction(p.eta);
  }
}

/// Paths unchanged inside the dead-band; otherwise every position and
/// normal moved by new_pose * inverse(old_pose).
inline std::vector<SegmentPath> update_paths_on_motion(const std::vector<SegmentPath>& paths,
                                                       const RigidTransform& old_pose,
                                                       const RigidTransform& new_pose, const DeadBand& band = {}) {
  std::vector<SegmentPath> out = paths;
  if (!exceeds_dead_band(old_pose, new_pose, band)) return out;
  const RigidTransform m = compose(new_pose, invert(old_pose));
  for (auto& p : out) reanchor(p.points, m);
  return out;
}

struct TrajectorySample {
  double time = 0.0;
  Vec3 position = Vec3::Zero();
  double delta_d = 0.0;
  double dist_l = std::numeric_limits<double>::quiet_NaN();  // fused |l|, NaN without a reading
  bool repulsing = false;
};

struct SimulationResult {
  ShotLog log;
  std::vector<TrajectorySample> trajectory;
  std::size_t skipped_targets = 0;
  std::size_t reanchors = 0;
  double min_distance = std::numeric_limits<double>::infinity();
  bool timed_out = false;
};

/// Optional environment for run_path. The face cloud is given in the
/// planning frame; the motion script moves it rigidly over time.
struct SimScene {
  const PointCloud* face = nullptr;
  const SensorRig* rig = nullptr;
  const MotionScript* motion = nullptr;
};

/// Visits every path point in order. The laser is armed on arrival at the
/// first point of a strip, with the distance counter primed so that it
/// fires there, and disarmed after the last point of the strip. The trigger
/// is evaluated at tick boundaries and on arrival at strip ends, and is
/// suppressed while repulsion is active. Tick periods are drawn from
/// (1 / rate) * (1 + jitter * (2U - 1)) with a seeded generator.
inline SimulationResult run_path(const std::vector<SegmentPath>& paths, const SimConfig& cfg,
                                 const SimScene& scene = {}) {
  cfg.validate();
  if (scene.rig) scene.rig->validate();
  if (scene.motion) scene.motion->validate();

  struct Waypoint {
    PathPoint point;
    std::string segment;
    bool first = false;
    bool last = false;
  };
  std::vector<Waypoint> wps;
  for (const auto& path : paths) {
    for (std::size_t i = 0; i < path.points.size(); ++i) {
      Waypoint w{path.points[i], path.label, false, false};
      w.first = i == 0 || path.points[i - 1].strip != w.point.strip;
      w.last = i + 1 == path.points.size() || path.points[i + 1].strip != w.point.strip;
      wps.push_back(std::move(w));
    }
  }
  SimulationResult result;
  if (wps.empty()) return result;

  auto pose_of = [](const PathPoint& p) {
    return PoseVector6{p.chi, rotation_to_axis_angle(rotation_from_normal(p.eta.normalized(), NormalFallback::substitute_z))};
  };

  std::optional<CloudIndex> face_index;
  if (scene.face && scene.rig && !scene.face->empty()) face_index.emplace(*scene.face);
  const DeadBand band{cfg.dead_band_translation, cfg.dead_band_rotation};
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  EffectorState st;
  st.pose = pose_of(wps.front().point);
  st.speed = cfg.speed > 0.0 ? cfg.speed : max_speed(cfg);

  auto fire_if_due = [&](std::size_t w) {
    const TriggerResult t = laser_trigger(st, cfg);
    if (!t.fired) return;
    st = t.state;
    ShotEvent e;
    e.psi = st.pose;
    e.time = st.time;
    e.index = static_cast<int>(result.log.shots.size());
    e.strip = wps[w].point.strip;
    e.segment = wps[w].segment;
    result.log.shots.push_back(e);
  };
  auto arrive = [&](std::size_t w) {
    if (wps[w].first) {
      st.laser_armed = true;
      st.delta_d = cfg.laser_diameter;
    }
    fire_if_due(w);
    if (wps[w].last) st.laser_armed = false;
  };

  arrive(0);
  std::size_t target = 1;
  RigidTransform anchor = scene.motion ? scene.motion->at(0.0) : RigidTransform::identity();
  double best_gap = std::numeric_limits<double>::infinity();
  double last_progress = 0.0;
  const double progress_eps = 0.25 * st.speed / cfg.control_rate;

  auto sense = [&]() -> std::optional<FusedReading> {
    if (!face_index) return std::nullopt;
    const RigidTransform face_pose = scene.motion ? scene.motion->at(st.time) : RigidTransform::identity();
    return sensor_fusion(*scene.rig, to_transform(st.pose), *face_index, face_pose);
  };
  auto record = [&](const std::optional<FusedReading>& reading, bool repulsing) {
    TrajectorySample s;
    s.time = st.time;
    s.position = st.pose.position;
    s.delta_d = st.delta_d;
    if (reading) {
      s.dist_l = reading->l.norm();
      result.min_distance = std::min(result.min_distance, s.dist_l);
    }
    s.repulsing = repulsing;
    result.trajectory.push_back(s);
  };

  while (target < wps.size()) {
    if (st.time > cfg.max_time) {
      result.timed_out = true;
      break;
    }
    const double dt = (1.0 + cfg.sample_jitter * (2.0 * uniform() - 1.0)) / cfg.control_rate;
    const auto reading = sense();
    Vec3 v_rep = Vec3::Zero();
    if (reading) {
      try {
        v_rep = repulsive_velocity(reading->l, *scene.rig);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ContactError) throw;
        throw Error(ErrorCode::AbortedOnSafety, "contact at t = " + std::to_string(st.time) + " s");
      }
    }
    const bool repulsing = v_rep.squaredNorm() > 0.0;
    record(reading, repulsing);

    const Vec3 start = st.pose.position;
    if (!repulsing) {
      double remaining = dt;
      while (remaining > 0.0 && target < wps.size()) {
        const PoseVector6 tp = pose_of(wps[target].point);
        const double reach = st.speed * remaining;
        const double moved = sim_detail::advance(st, tp, reach);
        if (st.pose.position == tp.position) {
          remaining -= moved / st.speed;
          arrive(target);
          ++target;
          best_gap = std::numeric_limits<double>::infinity();
          last_progress = st.time;
        } else {
          remaining = 0.0;
        }
      }
    } else {
      const Vec3 gap = pose_of(wps[target].point).position - st.pose.position;
      Vec3 v = v_rep;
      if (gap.norm() > 0.0) v += st.speed * gap.normalized();
      const double cap = max_speed(cfg);
      if (v.norm() > cap) v *= cap / v.norm();
      st.pose.position += v * dt;
      st.delta_d += v.norm() * dt;
    }
    st.time += dt;
    result.log.path_length += (st.pose.position - start).norm();

    if (scene.motion) {
      const RigidTransform now = scene.motion->at(st.time);
      if (exceeds_dead_band(anchor, now, band)) {
        const RigidTransform m = compose(now, invert(anchor));
        for (std::size_t w = target; w < wps.size(); ++w) {
          wps[w].point.chi = m.apply(wps[w].point.chi);
          wps[w].point.eta = m.apply_direction(wps[w].point.eta);
        }
        anchor = now;
        ++result.reanchors;
      }
    }

    if (!repulsing && target > 0) fire_if_due(target - 1);

    if (target < wps.size()) {
      const double gap = (wps[target].point.chi - st.pose.position).norm();
      if (gap < best_gap - progress_eps) {
        best_gap = gap;
        last_progress = st.time;
      } else if (st.time - last_progress > cfg.stall_timeout) {
        st.laser_armed = false;
        ++result.skipped_targets;
        ++target;
        best_gap = std::numeric_limits<double>::infinity();
        last_progress = st.time;
      }
    }
  }
  record(sense(), false);
  return result;
}

}  // namespace facelaser
