#pragma once

// File formats around the pipeline: landmark, camera, path and motion JSON,
// shot and trajectory CSV, and SVG plots of paths and shots.

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "facelaser/coverage.hpp"
#include "facelaser/errors.hpp"
#include "facelaser/geometry.hpp"
#include "facelaser/pathplan.hpp"
#include "facelaser/segmentation.hpp"
#include "facelaser/simulator.hpp"

namespace facelaser {

using Json = nlohmann::json;

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

/// Shortest round-trip decimal form; "nan" for NaN.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Json parse_json(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, source + ": " + e.what());
  }
}

inline Json load_json(const std::string& path) { return parse_json(read_text_file(path), path); }

namespace io_detail {

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw Error(ErrorCode::ParseError, what + " must be a number");
  return j.get<double>();
}

inline const Json& field(const Json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::MissingField, where + ": missing \"" + key + "\"");
  }
  return obj.at(key);
}

inline Vec3 vec3(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::ParseError, what + " must be an array of 3 numbers");
  return {number(j[0], what), number(j[1], what), number(j[2], what)};
}

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Pixel pixel(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::ParseError, what + " must be a [u, v] pair");
  return {number(j[0], what), number(j[1], what)};
}

}  // namespace io_detail

// ---- landmarks and polygons ----

inline FaceLandmarks landmarks_from_json(const Json& j) {
  FaceLandmarks lm;
  lm.width = static_cast<int>(io_detail::number(io_detail::field(j, "width", "landmarks"), "width"));
  lm.height = static_cast<int>(io_detail::number(io_detail::field(j, "height", "landmarks"), "height"));
  const Json& pts = io_detail::field(j, "points", "landmarks");
  if (!pts.is_array()) throw Error(ErrorCode::ParseError, "landmarks points must be an array");
  for (const auto& p : pts) lm.points.push_back(io_detail::pixel(p, "landmark"));
  if (lm.points.size() != 68) {
    throw Error(ErrorCode::MalformedLandmarks, "expected 68 landmarks, got " + std::to_string(lm.points.size()));
  }
  return lm;
}

inline Json landmarks_to_json(const FaceLandmarks& lm) {
  Json pts = Json::array();
  for (const auto& p : lm.points) pts.push_back(Json::array({p.u, p.v}));
  return Json{{"width", lm.width}, {"height", lm.height}, {"points", pts}};
}

/// Replaces the vertices of each named region.
inline void apply_polygon_overrides(std::vector<RegionPolygon>& polys, const Json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "polygon overrides must be an object");
  for (const auto& [key, verts] : j.items()) {
    const auto label = region_from_string(key);
    if (!label) throw Error(ErrorCode::ParseError, "unknown region label \"" + key + "\"");
    std::vector<Pixel> v;
    if (!verts.is_array()) throw Error(ErrorCode::ParseError, key + " vertices must be an array");
    for (const auto& p : verts) v.push_back(io_detail::pixel(p, key + " vertex"));
    if (v.size() < 3 || !is_simple_polygon(v)) {
      throw Error(ErrorCode::MalformedLandmarks, key + " override is not a simple polygon");
    }
    for (auto& poly : polys) {
      if (poly.label == *label) poly.vertices = v;
    }
  }
}

// ---- camera ----

struct CameraModel {
  CameraIntrinsics intrinsics;
  RigidTransform extrinsics;  // cloud frame -> camera frame
};

inline RigidTransform transform_from_json(const Json& j, const std::string& where) {
  RigidTransform t;
  if (j.contains("axis_angle")) t.rotation = axis_angle_to_rotation(io_detail::vec3(j.at("axis_angle"), where + ".axis_angle"));
  if (j.contains("rotation")) {
    const Json& r = j.at("rotation");
    if (!r.is_array() || r.size() != 9) throw Error(ErrorCode::ParseError, where + ".rotation must hold 9 numbers");
    for (int i = 0; i < 9; ++i) t.rotation(i / 3, i % 3) = io_detail::number(r[i], where + ".rotation");
    if (!is_rotation(t.rotation, 1e-6)) throw Error(ErrorCode::InvalidParam, where + ".rotation is not a rotation");
  }
  if (j.contains("translation")) t.translation = io_detail::vec3(j.at("translation"), where + ".translation");
  return t;
}

inline Json transform_to_json(const RigidTransform& t) {
  return Json{{"translation", io_detail::to_json(t.translation)},
              {"axis_angle", io_detail::to_json(rotation_to_axis_angle(t.rotation))}};
}

inline CameraModel camera_from_json(const Json& j) {
  CameraModel c;
  auto num = [&](const char* k) { return io_detail::number(io_detail::field(j, k, "camera"), k); };
  c.intrinsics.fx = num("fx");
  c.intrinsics.fy = num("fy");
  c.intrinsics.cx = num("cx");
  c.intrinsics.cy = num("cy");
  c.intrinsics.width = static_cast<int>(num("width"));
  c.intrinsics.height = static_cast<int>(num("height"));
  c.intrinsics.validate();
  if (j.contains("extrinsics")) c.extrinsics = transform_from_json(j.at("extrinsics"), "camera.extrinsics");
  return c;
}

inline Json camera_to_json(const CameraModel& c) {
  return Json{{"fx", c.intrinsics.fx},
              {"fy", c.intrinsics.fy},
              {"cx", c.intrinsics.cx},
              {"cy", c.intrinsics.cy},
              {"width", c.intrinsics.width},
              {"height", c.intrinsics.height},
              {"extrinsics", transform_to_json(c.extrinsics)}};
}

inline std::vector<RigidTransform> poses_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "poses must be an array");
  std::vector<RigidTransform> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(transform_from_json(j[i], "pose " + std::to_string(i)));
  return out;
}

// ---- paths ----

inline Json paths_to_json(const std::vector<SegmentPath>& paths) {
  Json arr = Json::array();
  for (const auto& path : paths) {
    for (const auto& p : path.points) {
      arr.push_back(Json{{"x", p.chi.x()},
                         {"y", p.chi.y()},
                         {"z", p.chi.z()},
                         {"nx", p.eta.x()},
                         {"ny", p.eta.y()},
                         {"nz", p.eta.z()},
                         {"segment_label", path.label},
                         {"strip_index", p.strip}});
    }
  }
  return arr;
}

/// Consecutive records with the same label form one segment path.
inline std::vector<SegmentPath> paths_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "path file must be an array");
  std::vector<SegmentPath> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& r = j[i];
    const std::string where = "path record " + std::to_string(i);
    auto num = [&](const char* k) { return io_detail::number(io_detail::field(r, k, where), where + "." + k); };
    PathPoint p;
    p.chi = Vec3(num("x"), num("y"), num("z"));
    p.eta = Vec3(num("nx"), num("ny"), num("nz"));
    if (std::abs(p.eta.norm() - 1.0) > 1e-6) throw Error(ErrorCode::InvalidParam, where + ": normal is not unit");
    p.strip = static_cast<int>(num("strip_index"));
    const Json& label = io_detail::field(r, "segment_label", where);
    if (!label.is_string()) throw Error(ErrorCode::ParseError, where + ".segment_label must be a string");
    if (out.empty() || out.back().label != label.get<std::string>()) {
      out.push_back({});
      out.back().label = label.get<std::string>();
    }
    out.back().points.push_back(p);
  }
  return out;
}

// ---- motion ----

inline MotionScript motion_from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "motion script must be an array");
  MotionScript m;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = "motion key " + std::to_string(i);
    MotionKeyframe k;
    k.t = io_detail::number(io_detail::field(j[i], "t_s", where), where + ".t_s");
    k.translation = io_detail::vec3(io_detail::field(j[i], "translation", where), where + ".translation");
    k.axis_angle = io_detail::vec3(io_detail::field(j[i], "axis_angle", where), where + ".axis_angle");
    m.keys.push_back(k);
  }
  m.validate();
  return m;
}

inline Json motion_to_json(const MotionScript& m) {
  Json arr = Json::array();
  for (const auto& k : m.keys) {
    arr.push_back(Json{{"t_s", k.t}, {"translation", io_detail::to_json(k.translation)},
                       {"axis_angle", io_detail::to_json(k.axis_angle)}});
  }
  return arr;
}

// ---- shot log and trajectory ----

inline std::string shots_to_csv(const ShotLog& log) {
  std::string out = "index,time_s,x,y,z,nu_x,nu_y,nu_z,strip,segment\n";
  for (const auto& s : log.shots) {
    out += std::to_string(s.index) + ',' + format_double(s.time);
    for (int k = 0; k < 3; ++k) out += ',' + format_double(s.psi.position[k]);
    for (int k = 0; k < 3; ++k) out += ',' + format_double(s.psi.orientation[k]);
    out += ',' + std::to_string(s.strip) + ',' + s.segment + '\n';
  }
  return out;
}

inline ShotLog shots_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("index,time_s,x,y,z", 0) != 0) {
    throw Error(ErrorCode::ParseError, "shot CSV: missing header");
  }
  ShotLog log;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 10) throw Error(ErrorCode::ParseError, "shot CSV line " + std::to_string(lineno) + ": expected 10 fields");
    try {
      ShotEvent e;
      e.index = std::stoi(f[0]);
      e.time = std::stod(f[1]);
      e.psi.position = Vec3(std::stod(f[2]), std::stod(f[3]), std::stod(f[4]));
      e.psi.orientation = Vec3(std::stod(f[5]), std::stod(f[6]), std::stod(f[7]));
      e.strip = std::stoi(f[8]);
      e.segment = f[9];
      log.shots.push_back(e);
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::ParseError, "shot CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return log;
}

inline std::string trajectory_to_csv(const std::vector<TrajectorySample>& traj) {
  std::string out = "time_s,x,y,z,delta_d,dist_l,repulsing_flag\n";
  for (const auto& s : traj) {
    out += format_double(s.time);
    for (int k = 0; k < 3; ++k) out += ',' + format_double(s.position[k]);
    out += ',' + format_double(s.delta_d) + ',' + format_double(s.dist_l) + ',' + (s.repulsing ? '1' : '0') + '\n';
  }
  return out;
}

/// Sum of distances between consecutive trajectory positions.
inline double trajectory_length_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  double total = 0.0;
  bool have = false;
  Vec3 prev = Vec3::Zero();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<std::string> f;
    while (std::getline(ls, cell, ',')) f.push_back(cell);
    if (f.size() != 7) throw Error(ErrorCode::ParseError, "trajectory CSV: expected 7 fields");
    const Vec3 p(std::stod(f[1]), std::stod(f[2]), std::stod(f[3]));
    if (have) total += (p - prev).norm();
    prev = p;
    have = true;
  }
  return total;
}

inline Json coverage_to_json(const CoverageReport& r) {
  return Json{{"n_shots", r.n_shots},
              {"path_length_m", r.path_length},
              {"mean_spacing_m", r.mean_spacing},
              {"spacing_variance_m2", r.spacing_variance},
              {"n_spacings", r.n_spacings},
              {"coverage", r.coverage},
              {"operable_area_m2", r.operable_area}};
}

// ---- SVG ----

namespace svg_detail {

struct Frame {
  double x0 = 0.0;
  double y0 = 0.0;
  double w = 1.0;
  double h = 1.0;
};

inline Frame frame_of(const std::vector<Vec3>& pts, double margin) {
  Frame f;
  if (pts.empty()) return f;
  double x1 = pts.front().x(), y1 = pts.front().y();
  f.x0 = x1;
  f.y0 = y1;
  for (const auto& p : pts) {
    f.x0 = std::min(f.x0, p.x());
    f.y0 = std::min(f.y0, p.y());
    x1 = std::max(x1, p.x());
    y1 = std::max(y1, p.y());
  }
  f.x0 -= margin;
  f.y0 -= margin;
  f.w = std::max(x1 - f.x0 + margin, 1e-6);
  f.h = std::max(y1 - f.y0 + margin, 1e-6);
  return f;
}

inline std::string mm(double metres) { return format_double(std::round(metres * 1e6) / 1e3); }

inline std::string header(const Frame& f) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + mm(f.x0) + ' ' + mm(f.y0) + ' ' + mm(f.w) + ' ' +
         mm(f.h) + "\" width=\"" + mm(f.w) + "mm\" height=\"" + mm(f.h) + "mm\">\n";
}

inline std::string polyline(const std::vector<PathPoint>& pts, const std::string& label) {
  std::string s = "<polyline data-segment=\"" + label + "\" fill=\"none\" stroke=\"black\" stroke-width=\"0.2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += mm(pts[i].chi.x()) + ',' + mm(pts[i].chi.y());
  }
  return s + "\"/>\n";
}

}  // namespace svg_detail

/// Planned paths in the camera x-y plane, millimetres: one black polyline
/// per segment.
inline std::string paths_to_svg(const std::vector<SegmentPath>& paths, double diameter) {
  std::vector<Vec3> all;
  for (const auto& p : paths) {
    for (const auto& q : p.points) all.push_back(q.chi);
  }
  const auto f = svg_detail::frame_of(all, diameter);
  std::string s = svg_detail::header(f);
  for (const auto& p : paths) s += svg_detail::polyline(p.points, p.label);
  return s + "</svg>\n";
}

/// Paths in black with a red circle of the laser diameter per shot.
inline std::string shots_to_svg(const std::vector<SegmentPath>& paths, const ShotLog& log, double diameter) {
  std::vector<Vec3> all;
  for (const auto& p : paths) {
    for (const auto& q : p.points) all.push_back(q.chi);
  }
  for (const auto& e : log.shots) all.push_back(e.psi.position);
  const auto f = svg_detail::frame_of(all, diameter);
  std::string s = svg_detail::header(f);
  for (const auto& p : paths) s += svg_detail::polyline(p.points, p.label);
  for (const auto& e : log.shots) {
    s += "<circle cx=\"" + svg_detail::mm(e.psi.position.x()) + "\" cy=\"" + svg_detail::mm(e.psi.position.y()) +
         "\" r=\"" + svg_detail::mm(0.5 * diameter) + "\" fill=\"none\" stroke=\"red\" stroke-width=\"0.1\"/>\n";
  }
  return s + "</svg>\n";
}

}  // namespace facelaser
