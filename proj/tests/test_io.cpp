#include <gtest/gtest.h>

#include <functional>

#include "facelaser/config.hpp"
#include "facelaser/io.hpp"
#include "facelaser/synthetic.hpp"
#include "support.hpp"

using namespace facelaser;
using testutil::Gen;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no facelaser::Error thrown";
  return ErrorCode::IoError;
}

std::size_t count(const std::string& s, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const RunConfig a;
  const RunConfig b = config_from_json(config_to_json(a));
  EXPECT_EQ(config_to_json(a).dump(), config_to_json(b).dump());
  EXPECT_DOUBLE_EQ(a.laser_diameter_m, 0.004);
  EXPECT_DOUBLE_EQ(a.pulse_rate_hz, 5.0);
  EXPECT_DOUBLE_EQ(a.d_min_m, 0.25);
  EXPECT_DOUBLE_EQ(a.l_min_m, 0.03);
}

TEST(Config, OverlayAndRejection) {
  const RunConfig c = config_from_json(Json{{"laser_diameter_m", 0.003}, {"seed", 7}});
  EXPECT_DOUBLE_EQ(c.laser_diameter_m, 0.003);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_DOUBLE_EQ(c.pulse_rate_hz, 5.0);
  EXPECT_EQ(code_of([] { (void)config_from_json(Json{{"laser_diameterr", 0.003}}); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([] { (void)config_from_json(Json{{"laser_diameter_m", "big"}}); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { (void)config_from_json(Json{{"laser_diameter_m", 0.0}}); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([] { (void)config_from_json(Json{{"obliquity_model", "sideways"}}); }), ErrorCode::InvalidParam);
  EXPECT_EQ(code_of([] { (void)config_from_json(Json::array()); }), ErrorCode::ParseError);
}

TEST(Json, ParseErrorsAndMissingFiles) {
  EXPECT_EQ(code_of([] { (void)parse_json("{not json", "x"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { (void)read_text_file("/nonexistent/file.json"); }), ErrorCode::IoError);
}

TEST(FormatDouble, ShortestRoundTrip) {
  Gen g(81);
  for (int i = 0; i < 1000; ++i) {
    const double v = g.gaussian() * std::pow(10.0, g.uniform(-8, 3));
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(std::nan("")), "nan");
}

TEST(Paths, JsonRoundTripIsExact) {
  Gen g(82);
  std::vector<SegmentPath> paths;
  for (const char* label : {"nose", "forehead", "nose"}) {
    SegmentPath p;
    p.label = label;
    for (int i = 0; i < 20; ++i) p.points.push_back({g.vec(-0.1, 0.1), g.unit_vector(), i / 5});
    paths.push_back(p);
  }
  const auto back = paths_from_json(parse_json(paths_to_json(paths).dump(), "paths"));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(back[s].label, paths[s].label);
    ASSERT_EQ(back[s].points.size(), paths[s].points.size());
    for (std::size_t i = 0; i < paths[s].points.size(); ++i) {
      EXPECT_EQ(back[s].points[i].chi, paths[s].points[i].chi);
      EXPECT_EQ(back[s].points[i].eta, paths[s].points[i].eta);
      EXPECT_EQ(back[s].points[i].strip, paths[s].points[i].strip);
    }
  }
}

TEST(Paths, MalformedRecords) {
  EXPECT_EQ(code_of([] { (void)paths_from_json(Json::object()); }), ErrorCode::ParseError);
  Json rec{{"x", 0}, {"y", 0}, {"z", 0.4}, {"nx", 0}, {"ny", 0}, {"nz", 1}, {"segment_label", "a"}, {"strip_index", 0}};
  EXPECT_NO_THROW((void)paths_from_json(Json::array({rec})));
  Json missing = rec;
  missing.erase("nz");
  EXPECT_EQ(code_of([&] { (void)paths_from_json(Json::array({missing})); }), ErrorCode::MissingField);
  Json non_unit = rec;
  non_unit["nz"] = 2;
  EXPECT_EQ(code_of([&] { (void)paths_from_json(Json::array({non_unit})); }), ErrorCode::InvalidParam);
}

TEST(Shots, CsvRoundTripIsExact) {
  Gen g(83);
  ShotLog log;
  for (int i = 0; i < 50; ++i) {
    ShotEvent e;
    e.index = i;
    e.time = g.uniform(0, 100);
    e.psi.position = g.vec(-0.2, 0.6);
    e.psi.orientation = g.vec(-3, 3);
    e.strip = i / 7;
    e.segment = i < 25 ? "left_cheek" : "nose";
    log.shots.push_back(e);
  }
  const ShotLog back = shots_from_csv(shots_to_csv(log));
  ASSERT_EQ(back.shots.size(), log.shots.size());
  for (std::size_t i = 0; i < log.shots.size(); ++i) {
    EXPECT_EQ(back.shots[i].index, log.shots[i].index);
    EXPECT_EQ(back.shots[i].time, log.shots[i].time);
    EXPECT_EQ(back.shots[i].psi.position, log.shots[i].psi.position);
    EXPECT_EQ(back.shots[i].psi.orientation, log.shots[i].psi.orientation);
    EXPECT_EQ(back.shots[i].strip, log.shots[i].strip);
    EXPECT_EQ(back.shots[i].segment, log.shots[i].segment);
  }
  EXPECT_EQ(code_of([] { (void)shots_from_csv("a,b\n"); }), ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { (void)shots_from_csv("index,time_s,x,y,z,nu_x,nu_y,nu_z,strip,segment\n1,2\n"); }),
            ErrorCode::ParseError);
  EXPECT_EQ(code_of([] { (void)shots_from_csv("index,time_s,x,y,z,nu_x,nu_y,nu_z,strip,segment\n1,q,0,0,0,0,0,0,0,s\n"); }),
            ErrorCode::ParseError);
}

TEST(Trajectory, CsvLength) {
  std::vector<TrajectorySample> t(4);
  t[1].position = Vec3(0.003, 0, 0);
  t[2].position = Vec3(0.003, 0.004, 0);
  t[3].position = Vec3(0.003, 0.004, 0.012);
  t[2].dist_l = 0.05;
  t[3].repulsing = true;
  const std::string csv = trajectory_to_csv(t);
  EXPECT_EQ(count(csv, "\n"), 5u);
  EXPECT_NE(csv.find(",nan,0\n"), std::string::npos);
  EXPECT_NEAR(trajectory_length_from_csv(csv), 0.019, 1e-15);
}

TEST(Landmarks, RoundTripAndCount) {
  const FaceLandmarks lm = canonical_landmarks();
  const FaceLandmarks back = landmarks_from_json(landmarks_to_json(lm));
  ASSERT_EQ(back.points.size(), 68u);
  for (std::size_t i = 0; i < 68; ++i) {
    EXPECT_EQ(back.points[i].u, lm.points[i].u);
    EXPECT_EQ(back.points[i].v, lm.points[i].v);
  }
  Json short_list = landmarks_to_json(lm);
  short_list["points"].erase(0);
  EXPECT_EQ(code_of([&] { (void)landmarks_from_json(short_list); }), ErrorCode::MalformedLandmarks);
  Json no_width = landmarks_to_json(lm);
  no_width.erase("width");
  EXPECT_EQ(code_of([&] { (void)landmarks_from_json(no_width); }), ErrorCode::MissingField);
}

TEST(Polygons, OverridesReplaceNamedRegion) {
  auto polys = build_region_polygons(canonical_landmarks());
  const auto before = polys;
  apply_polygon_overrides(polys, Json{{"nose", Json::array({Json::array({300, 200}), Json::array({340, 200}),
                                                            Json::array({320, 260})})}});
  for (std::size_t i = 0; i < polys.size(); ++i) {
    if (polys[i].label == RegionLabel::nose) {
      ASSERT_EQ(polys[i].vertices.size(), 3u);
      EXPECT_EQ(polys[i].vertices[2].v, 260.0);
    } else {
      EXPECT_EQ(polys[i].vertices.size(), before[i].vertices.size());
    }
  }
  EXPECT_EQ(code_of([&] { apply_polygon_overrides(polys, Json{{"ear", Json::array()}}); }), ErrorCode::ParseError);
  const Json bowtie{{"nose", Json::array({Json::array({0, 0}), Json::array({10, 10}), Json::array({10, 0}),
                                          Json::array({0, 10})})}};
  EXPECT_EQ(code_of([&] { apply_polygon_overrides(polys, bowtie); }), ErrorCode::MalformedLandmarks);
}

TEST(Camera, RoundTripAndMissingField) {
  CameraModel c{synthetic_camera(), RigidTransform{rot_y(0.2), Vec3(0.01, -0.02, 0.03)}};
  const CameraModel back = camera_from_json(camera_to_json(c));
  EXPECT_EQ(back.intrinsics.fx, c.intrinsics.fx);
  EXPECT_EQ(back.intrinsics.height, c.intrinsics.height);
  EXPECT_LT(testutil::max_abs_diff(back.extrinsics.rotation, c.extrinsics.rotation), 1e-15);
  EXPECT_EQ(back.extrinsics.translation, c.extrinsics.translation);
  Json j = camera_to_json(c);
  j.erase("cy");
  EXPECT_EQ(code_of([&] { (void)camera_from_json(j); }), ErrorCode::MissingField);
  Json bad = camera_to_json(c);
  bad["extrinsics"] = Json{{"rotation", Json::array({1, 0, 0, 0, 1, 0, 0, 0, 2})}};
  EXPECT_EQ(code_of([&] { (void)camera_from_json(bad); }), ErrorCode::InvalidParam);
}

TEST(Motion, RoundTripAndOrder) {
  MotionScript m;
  m.keys = {{0.0, Vec3::Zero(), Vec3::Zero()}, {1.5, Vec3(0.01, 0, 0), Vec3(0, 0.2, 0)}};
  const MotionScript back = motion_from_json(motion_to_json(m));
  ASSERT_EQ(back.keys.size(), 2u);
  EXPECT_EQ(back.keys[1].t, 1.5);
  EXPECT_EQ(back.keys[1].axis_angle, m.keys[1].axis_angle);
  // halfway: half the translation and half the rotation
  const RigidTransform mid = back.at(0.75);
  EXPECT_LT((mid.translation - Vec3(0.005, 0, 0)).norm(), 1e-15);
  EXPECT_LT(testutil::max_abs_diff(mid.rotation, rot_y(0.1)), 1e-12);
  Json reversed = motion_to_json(m);
  reversed[1]["t_s"] = 0.0;
  EXPECT_EQ(code_of([&] { (void)motion_from_json(reversed); }), ErrorCode::InvalidParam);
}

TEST(Svg, OneVertexPerPathPointAndOneCirclePerShot) {
  const SegmentPath a = straight_path(Vec3(0, 0, 0.4), Vec3(0.02, 0, 0.4), 0.004, Vec3::UnitZ(), "a");
  const SegmentPath b = straight_path(Vec3(0, 0.01, 0.4), Vec3(0.03, 0.01, 0.4), 0.003, Vec3::UnitZ(), "b");
  const std::string svg = paths_to_svg({a, b}, 0.004);
  EXPECT_EQ(count(svg, "<polyline"), 2u);
  const auto start = svg.find("points=\"") + 8;
  const std::string first = svg.substr(start, svg.find('"', start) - start);
  EXPECT_EQ(count(first, ","), a.points.size());
  ShotLog log;
  log.shots.resize(5);
  const std::string shots = shots_to_svg({a}, log, 0.004);
  EXPECT_EQ(count(shots, "<circle"), 5u);
  EXPECT_EQ(count(shots, "r=\"2\""), 5u);
}
