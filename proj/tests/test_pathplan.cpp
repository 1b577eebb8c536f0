#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "facelaser/pathplan.hpp"
#include "facelaser/synthetic.hpp"
#include "support.hpp"

using namespace facelaser;
using testutil::Gen;

namespace {

PlannerConfig config(double d, ObliquityModel m = ObliquityModel::surface_pitch) {
  PlannerConfig c;
  c.laser_diameter = d;
  c.obliquity = m;
  return c;
}

// Rows of points at the given y values, x from 0 to x_extent, normals -z.
PointCloud rows(const std::vector<double>& ys, double x_extent, double spacing) {
  PointCloud c;
  c.has_normals = true;
  for (double y : ys) {
    const auto n = static_cast<int>(std::round(x_extent / spacing));
    for (int i = 0; i <= n; ++i) {
      SurfacePoint p;
      p.position = Vec3(i * spacing, y, 0.3);
      p.normal = Vec3(0, 0, -1);
      c.points.push_back(p);
    }
  }
  return c;
}

// Plane through (0, 0, 0.4) tilted by `tilt` about x, sampled on a square grid
// of spacing h in its own coordinates.
PointCloud tilted_plane(double tilt, double width, double height, double h, RigidTransform& pose) {
  pose = RigidTransform{rot_x(tilt), Vec3(0, 0, 0.4)};
  const auto nx = static_cast<std::size_t>(std::round(width / h)) + 1;
  const auto ny = static_cast<std::size_t>(std::round(height / h)) + 1;
  return planar_grid(nx, ny, h, pose);
}

// Spherical cap of radius r facing the camera, normals pointing outwards
// towards it.
PointCloud cap(double r, double half_angle, std::size_t n) {
  const PointCloud sphere = ellipsoid_surface(Vec3(r, r, r), Vec3(0, 0, 0.4), n);
  PointCloud out = sphere;
  out.points.clear();
  for (const auto& p : sphere.points) {
    if (-p.normal.z() >= std::cos(half_angle)) out.points.push_back(p);
  }
  return out;
}

}  // namespace

TEST(MaxSpeed, Examples) {
  PlannerConfig c = config(0.003);
  c.pulse_rate = 10.0;
  EXPECT_NEAR(max_speed(c), 0.03, 1e-15);
  EXPECT_NEAR(max_speed(config(0.004)), 0.02, 1e-15);
  c = config(0.002);
  c.pulse_rate = 1.0;
  EXPECT_NEAR(max_speed(c), 0.002, 1e-15);
  EXPECT_THROW(config(0.0).validate(), Error);
}

TEST(Obliquity, FacingAndDegenerate) {
  EXPECT_EQ(strip_obliquity(Vec3(0, 0, -1), Vec3::UnitZ()), 0.0);
  EXPECT_EQ(strip_obliquity(Vec3(0, 0, 1), Vec3::UnitZ()), 0.0);
  // normal along the hinge: no tilt about it
  EXPECT_EQ(strip_obliquity(Vec3(1, 0, 0), Vec3::UnitZ()), 0.0);
  const double o = strip_obliquity(Vec3(0, -std::sin(deg_to_rad(60.0)), -std::cos(deg_to_rad(60.0))), Vec3::UnitZ());
  EXPECT_NEAR(o, deg_to_rad(60.0), 1e-12);
  EXPECT_NEAR(strip_width(0.003, o, ObliquityModel::as_printed), 0.006, 1e-12);
  EXPECT_NEAR(strip_width(0.003, o, ObliquityModel::surface_pitch), 0.0015, 1e-12);
  EXPECT_DOUBLE_EQ(strip_width(0.003, o, ObliquityModel::none), 0.003);
}

TEST(Obliquity, MatchesProjectionAngleOracle) {
  Gen g(51);
  for (int i = 0; i < 2000; ++i) {
    const double a = g.uniform(-deg_to_rad(85.0), deg_to_rad(85.0));
    const double b = g.uniform(-deg_to_rad(70.0), deg_to_rad(70.0));
    const double sign = g.uniform() < 0.5 ? -1.0 : 1.0;
    // tilt a about the hinge x, plus a lean b along it
    const Vec3 eta = sign * Vec3(std::sin(b), std::cos(b) * std::sin(a), std::cos(b) * std::cos(a));
    const Vec3 proj(0.0, eta.y(), eta.z());
    const double oracle = std::atan2(std::abs(proj.y()), std::abs(proj.z()));
    EXPECT_NEAR(strip_obliquity(eta, Vec3::UnitZ()), oracle, 1e-9);
    EXPECT_NEAR(oracle, std::abs(a), 1e-9);
  }
  // hinge along y measures the tilt about y
  EXPECT_NEAR(strip_obliquity(Vec3(std::sin(0.3), 0, std::cos(0.3)), Vec3::UnitZ(), Vec3::UnitY()), 0.3, 1e-12);
}

TEST(BinStrips, FacingPlaneNineMillimetres) {
  const PointCloud c = rows({0.0005, 0.0015, 0.0025, 0.0035, 0.0045, 0.0055, 0.0065, 0.0075, 0.0085}, 0.01, 0.001);
  const auto strips = bin_strips(c, config(0.003), Vec3::UnitZ(), StripOrientation::horizontal);
  ASSERT_EQ(strips.size(), 3u);
  EXPECT_EQ(strips[0].points.size() + strips[1].points.size() + strips[2].points.size(), c.size());
  for (const auto& s : strips) {
    EXPECT_NEAR(s.hi - s.lo, 0.003, 1e-12);
    EXPECT_EQ(s.points.size() % 11, 0u);
    EXPECT_EQ(s.obliquity, 0.0);
  }
}

TEST(BinStrips, SixtyDegreeTiltDoublesWidthAsPrinted) {
  // projected rows at 0.5 .. 8.5 mm on a plane tilted 60 degrees about x
  PointCloud c;
  c.has_normals = true;
  const double t = deg_to_rad(60.0);
  for (int j = 0; j < 9; ++j) {
    for (int i = 0; i <= 10; ++i) {
      SurfacePoint p;
      const double y = 0.0005 + 0.001 * j;
      p.position = Vec3(0.001 * i, y, 0.4 + y * std::tan(t));
      p.normal = Vec3(0, std::sin(t), -std::cos(t));
      c.points.push_back(p);
    }
  }
  const auto strips = bin_strips(c, config(0.003, ObliquityModel::as_printed), Vec3::UnitZ(), StripOrientation::horizontal);
  ASSERT_EQ(strips.size(), 2u);
  for (const auto& s : strips) EXPECT_NEAR(s.hi - s.lo, 0.006, 1e-12);
  EXPECT_THROW(bin_strips(PointCloud{}, config(0.003), Vec3::UnitZ()), Error);
}

TEST(BinStrips, PartitionOnRandomClouds) {
  Gen g(52);
  for (int trial = 0; trial < 30; ++trial) {
    PointCloud c;
    c.has_normals = true;
    const std::size_t n = 200 + static_cast<std::size_t>(g.uniform(0, 2000));
    for (std::size_t i = 0; i < n; ++i) {
      SurfacePoint p;
      p.position = Vec3(g.uniform(-0.02, 0.02), g.uniform(-0.03, 0.03), 0.4 + g.uniform(-0.01, 0.01));
      p.normal = (Vec3(0, 0, -1) + 0.8 * g.unit_vector()).normalized();
      c.points.push_back(p);
    }
    const auto model = trial % 3 == 0 ? ObliquityModel::as_printed
                                      : (trial % 3 == 1 ? ObliquityModel::surface_pitch : ObliquityModel::none);
    const PlannerConfig cfg = config(g.uniform(0.001, 0.006), model);
    for (const auto o : {StripOrientation::horizontal, StripOrientation::vertical}) {
      const int axis = strip_axes(o).first;
      const auto strips = bin_strips(c, cfg, Vec3::UnitZ(), o);
      std::size_t total = 0;
      for (std::size_t k = 0; k < strips.size(); ++k) {
        const auto& s = strips[k];
        EXPECT_EQ(s.index, static_cast<int>(k));
        EXPECT_NEAR(s.hi - s.lo, strip_width(cfg.laser_diameter, s.obliquity, model), 1e-12);
        EXPECT_LE(s.obliquity, cfg.max_obliquity);
        if (k > 0) {
          EXPECT_GE(s.lo, strips[k - 1].hi);
        }
        for (const auto& p : s.points.points) {
          EXPECT_GE(p.position[axis], s.lo);
          EXPECT_LT(p.position[axis], s.hi);
        }
        total += s.points.size();
      }
      EXPECT_EQ(total, c.size());
    }
  }
}

TEST(Sweep, UniformGridMatchesCellCentroidOracle) {
  const double d = 0.003;
  const PointCloud c = rows({0.0, 0.001, 0.002}, 0.029, 0.001);
  // shift x so points sit at 0.5 .. 29.5 mm
  PointCloud shifted = c;
  for (auto& p : shifted.points) p.position.x() += 0.0005;
  Strip s;
  s.points = shifted;
  s.normal = Vec3(0, 0, -1);
  const auto fwd = sweep_patch(s, config(d), 1);
  // oracle: ten 2.9 mm cells from 0.5 mm, each holding three columns
  ASSERT_EQ(fwd.size(), 10u);
  for (std::size_t k = 0; k < fwd.size(); ++k) {
    Vec3 sum = Vec3::Zero();
    int count = 0;
    for (const auto& p : shifted.points) {
      const auto cell = std::min<long>(9, static_cast<long>(std::floor((p.position.x() - 0.0005) / 0.0029)));
      if (cell == static_cast<long>(k)) {
        sum += p.position;
        ++count;
      }
    }
    EXPECT_LT((fwd[k].chi - sum / count).norm(), 1e-15);
    EXPECT_LT((fwd[k].eta - Vec3(0, 0, -1)).norm(), 1e-15);
    if (k > 0) {
      EXPECT_NEAR(fwd[k].chi.x() - fwd[k - 1].chi.x(), d, 1e-12);
    }
  }
  const auto back = sweep_patch(s, config(d), -1);
  ASSERT_EQ(back.size(), fwd.size());
  for (std::size_t k = 0; k < fwd.size(); ++k) EXPECT_EQ(back[k].chi, fwd[fwd.size() - 1 - k].chi);
}

TEST(Sweep, SinglePointAndGap) {
  Strip one;
  one.points.has_normals = true;
  one.points.points.push_back({Vec3(0.01, 0.02, 0.3), Vec3(0, 0, -1), {}});
  const auto p = sweep_patch(one, config(0.003), 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0].chi, Vec3(0.01, 0.02, 0.3));

  // columns at 0..7 and 13..20 mm in 4 mm cells: the cell over the gap is skipped
  PointCloud c = rows({0.0}, 0.020, 0.001);
  c.points.erase(std::remove_if(c.points.begin(), c.points.end(),
                                [](const SurfacePoint& q) { return q.position.x() > 0.0075 && q.position.x() < 0.0125; }),
                 c.points.end());
  Strip gap;
  gap.points = c;
  const auto g = sweep_patch(gap, config(0.004), 1);
  ASSERT_EQ(g.size(), 4u);
  EXPECT_NEAR(g[0].chi.x(), 0.0015, 1e-12);
  EXPECT_NEAR(g[1].chi.x(), 0.0055, 1e-12);
  EXPECT_NEAR(g[2].chi.x(), 0.014, 1e-12);
  EXPECT_NEAR(g[3].chi.x(), 0.018, 1e-12);
  EXPECT_TRUE(sweep_patch(Strip{}, config(0.004), 1).empty());
}

TEST(PlanSegment, FortySevenMillimetrePatch) {
  const PointCloud patch = planar_grid(48, 48, 0.001, RigidTransform{Mat3::Identity(), Vec3(-0.0235, -0.0235, 0.4)});
  const SegmentPath path = plan_segment(patch, config(0.004), Vec3::UnitZ(), "patch");
  EXPECT_EQ(path.label, "patch");
  EXPECT_EQ(path.orientation, StripOrientation::horizontal);
  // analytic row count ceil(extent / d) for a facing plane
  EXPECT_EQ(path.strip_widths.size(), static_cast<std::size_t>(std::ceil(0.047 / 0.004)));
  std::map<int, std::vector<PathPoint>> by_strip;
  for (const auto& p : path.points) by_strip[p.strip].push_back(p);
  ASSERT_EQ(by_strip.size(), 12u);
  for (const auto& [k, pts] : by_strip) {
    EXPECT_GE(pts.size(), 11u);
    EXPECT_LE(pts.size(), 12u);
    const double dir = k % 2 == 0 ? 1.0 : -1.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double step = dir * (pts[i].chi.x() - pts[i - 1].chi.x());
      EXPECT_NEAR(step, 0.004, 0.0004);
    }
    for (const auto& p : pts) EXPECT_LT((p.eta - Vec3::UnitZ()).norm(), 1e-12);
  }
}

TEST(PlanSegment, TallSegmentGoesVertical) {
  const PointCloud tall = planar_grid(10, 40, 0.001, RigidTransform{Mat3::Identity(), Vec3(0, 0, 0.4)});
  const SegmentPath p = plan_segment(tall, config(0.003), Vec3::UnitZ());
  EXPECT_EQ(p.orientation, StripOrientation::vertical);
  // vertical strips sweep along y
  EXPECT_GT(std::abs(p.points[1].chi.y() - p.points[0].chi.y()), 0.002);
  EXPECT_NEAR(p.points[1].chi.x(), p.points[0].chi.x(), 1e-12);
  EXPECT_THROW(plan_segment(PointCloud{}, config(0.003), Vec3::UnitZ()), Error);
}

TEST(PlanSegment, ObliquityKeepsSurfaceRowPitch) {
  const double d = 0.004;
  for (int deg = 0; deg <= 70; deg += 10) {
    const double tilt = deg_to_rad(static_cast<double>(deg));
    RigidTransform pose;
    const PointCloud plane = tilted_plane(tilt, 0.012, 0.06, 0.00005, pose);
    for (const auto model : {ObliquityModel::surface_pitch, ObliquityModel::none}) {
      PlannerConfig cfg = config(d, model);
      cfg.orientation = StripOrientation::horizontal;
      const SegmentPath path = plan_segment(plane, cfg, Vec3::UnitZ());
      // strip centres in surface coordinates
      std::map<int, std::pair<double, int>> acc;
      for (const auto& p : path.points) {
        auto& [sum, n] = acc[p.strip];
        sum += invert(pose).apply(p.chi).y();
        ++n;
      }
      std::vector<double> centres;
      for (const auto& [k, v] : acc) centres.push_back(v.first / v.second);
      ASSERT_GE(centres.size(), 3u);
      const double expected = model == ObliquityModel::surface_pitch ? d : d / std::cos(tilt);
      for (std::size_t k = 1; k + 1 < centres.size(); ++k) {
        EXPECT_NEAR(centres[k] - centres[k - 1], expected, 0.02 * expected) << deg << " deg";
      }
    }
  }
}

TEST(PlanSegment, HemisphereCapSpacingAndSurfaceContact) {
  const PointCloud c = cap(0.04, deg_to_rad(60.0), 60000);
  const auto pos = c.positions();
  const KdTree tree(pos);
  for (const double d : {0.003, 0.004, 0.006}) {
    const SegmentPath path = plan_segment(c, config(d), Vec3::UnitZ());
    const std::size_t n = path.points.size();
    const int last = path.points.back().strip;
    // Centroids of the rim strips and of the end cells of each strip are
    // pulled inwards by the segment boundary; spacing is asserted on the rest.
    std::vector<bool> interior(n);
    for (std::size_t i = 0; i < n; ++i) {
      const int s = path.points[i].strip;
      const bool end = i == 0 || i + 1 == n || path.points[i - 1].strip != s || path.points[i + 1].strip != s;
      interior[i] = s != 0 && s != last && !end;
    }
    std::size_t close_pairs = 0, checked = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_LT(std::sqrt(tree.nearest(path.points[i].chi).second), d);
      EXPECT_NEAR(path.points[i].eta.norm(), 1.0, 1e-6);
      EXPECT_GT(path.points[i].eta.dot(Vec3::UnitZ()), 0.0);
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!interior[i] || !interior[j]) continue;
        ++checked;
        if ((path.points[i].chi - path.points[j].chi).norm() < 0.9 * d) ++close_pairs;
      }
    }
    EXPECT_GT(checked, 1000u);
    EXPECT_EQ(close_pairs, 0u) << "diameter " << d;
  }
}

TEST(Poses, PathToPoses) {
  SegmentPath flat = straight_path(Vec3(0, 0, 0.4), Vec3(0.02, 0, 0.4), 0.004);
  const auto poses = path_to_poses(flat);
  ASSERT_EQ(poses.size(), flat.points.size());
  for (const auto& p : poses) EXPECT_EQ(p.orientation, poses.front().orientation);
  EXPECT_TRUE(path_to_poses(SegmentPath{}).empty());

  const PointCloud c = cap(0.04, deg_to_rad(50.0), 20000);
  const SegmentPath path = plan_segment(c, config(0.004), Vec3::UnitZ());
  const auto cap_poses = path_to_poses(path);
  ASSERT_EQ(cap_poses.size(), path.points.size());
  for (std::size_t i = 0; i < cap_poses.size(); ++i) {
    EXPECT_EQ(cap_poses[i].position, path.points[i].chi);
    EXPECT_LT((axis_angle_to_rotation(cap_poses[i].orientation) * Vec3::UnitZ() - path.points[i].eta).norm(), 1e-9);
  }

  SegmentPath bad;
  bad.points.push_back({Vec3::Zero(), Vec3::UnitY(), 0});
  try {
    path_to_poses(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateNormal);
    EXPECT_NE(std::string(e.what()).find("path point 0"), std::string::npos);
  }
}
