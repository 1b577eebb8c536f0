#include <gtest/gtest.h>

#include <cmath>

#include "facelaser/coverage.hpp"
#include "facelaser/synthetic.hpp"
#include "support.hpp"

using namespace facelaser;
using testutil::Gen;

namespace {

ShotLog shots_at(const std::vector<Vec3>& centres, int strip = 0) {
  ShotLog log;
  for (const auto& c : centres) {
    ShotEvent e;
    e.psi.position = c;
    e.index = static_cast<int>(log.shots.size());
    e.strip = strip;
    e.segment = "s";
    log.shots.push_back(e);
  }
  return log;
}

// Fraction of an n x n midpoint grid over [x0, x1] x [y0, y1] within r of a centre.
double grid_oracle(const std::vector<Vec3>& centres, double r, double x0, double y0, double x1, double y1, int n) {
  std::size_t hit = 0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double x = x0 + (x1 - x0) * (i + 0.5) / n;
      const double y = y0 + (y1 - y0) * (j + 0.5) / n;
      for (const auto& c : centres) {
        if ((x - c.x()) * (x - c.x()) + (y - c.y()) * (y - c.y()) <= r * r) {
          ++hit;
          break;
        }
      }
    }
  }
  return static_cast<double>(hit) / (static_cast<double>(n) * n);
}

}  // namespace

TEST(Coverage, SingleShotInItsBoundingSquare) {
  const ShotLog log = shots_at({Vec3::Zero()});
  const auto r = coverage_metrics(log, rectangle_region(RigidTransform::identity(), -0.5, -0.5, 0.5, 0.5), 1.0);
  // Monte Carlo standard error at 1e6 samples is about 4e-4
  EXPECT_NEAR(r.coverage, kPi / 4.0, 2e-3);
  EXPECT_NEAR(r.operable_area, 1.0, 1e-15);
  EXPECT_EQ(r.n_shots, 1u);
  EXPECT_EQ(r.n_spacings, 0u);
}

TEST(Coverage, TwoOverlappingShotsMatchLensFormula) {
  const double d = 0.004, r = d / 2.0;
  for (const double s : {0.0, 0.001, 0.002, 0.0035, 0.004, 0.006}) {
    const ShotLog log = shots_at({Vec3(0, 0, 0.4), Vec3(s, 0, 0.4)});
    const PlanarRegion region = rectangle_region(RigidTransform{Mat3::Identity(), Vec3(0, 0, 0.4)}, -r, -r, s + r, r);
    const double lens = s < d ? 2 * r * r * std::acos(s / (2 * r)) - 0.5 * s * std::sqrt(4 * r * r - s * s) : 0.0;
    const double expected = (2 * kPi * r * r - lens) / ((s + d) * d);
    EXPECT_NEAR(coverage_metrics(log, region, d).coverage, expected, 2e-3) << "s = " << s;
  }
}

TEST(Coverage, RandomDisksMatchGridOracle) {
  Gen g(71);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Vec3> c;
    const int n = 5 + trial * 7;
    for (int i = 0; i < n; ++i) c.push_back(Vec3(g.uniform(0, 0.03), g.uniform(0, 0.02), 0.0));
    const double d = 0.004;
    const auto r = coverage_metrics(shots_at(c), rectangle_region(RigidTransform::identity(), 0, 0, 0.03, 0.02), d,
                                    1000000, 5 + static_cast<std::uint64_t>(trial));
    EXPECT_NEAR(r.coverage, grid_oracle(c, d / 2, 0, 0, 0.03, 0.02, 1500), 3e-3);
  }
}

TEST(Coverage, ShotsProjectOntoTiltedRegionPlane) {
  const RigidTransform frame{rot_x(deg_to_rad(40.0)), Vec3(0, 0, 0.4)};
  // a shot lifted off the plane along its normal covers the same disk
  const ShotLog log = shots_at({frame.apply(Vec3(0, 0, 0.01))});
  const auto r = coverage_metrics(log, rectangle_region(frame, -0.5e-3, -0.5e-3, 0.5e-3, 0.5e-3), 1e-3);
  EXPECT_NEAR(r.coverage, kPi / 4.0, 2e-3);
}

TEST(Coverage, DeterministicForSeed) {
  const ShotLog log = shots_at({Vec3(0, 0, 0), Vec3(0.003, 0.001, 0)});
  const PlanarRegion region = rectangle_region(RigidTransform::identity(), -0.003, -0.003, 0.006, 0.004);
  const auto a = coverage_metrics(log, region, 0.004, 100000, 3);
  const auto b = coverage_metrics(log, region, 0.004, 100000, 3);
  EXPECT_EQ(a.coverage, b.coverage);
}

TEST(Coverage, CloudRegionCountsCoveredPoints) {
  const PointCloud plane = planar_grid(11, 11, 0.001);
  // a shot at the grid centre with diameter 4 mm covers the points within 2 mm
  const ShotLog log = shots_at({Vec3(0.005, 0.005, 0.0)});
  std::size_t inside = 0;
  for (const auto& p : plane.points) inside += (p.position - Vec3(0.005, 0.005, 0)).norm() <= 0.002 ? 1 : 0;
  const auto r = coverage_metrics(log, plane, 0.004, 1e-6);
  EXPECT_DOUBLE_EQ(r.coverage, static_cast<double>(inside) / 121.0);
  EXPECT_NEAR(r.operable_area, 121e-6, 1e-18);
  EXPECT_THROW(coverage_metrics(log, PointCloud{}, 0.004, 1e-6), Error);
}

TEST(Coverage, EmptyLogAndBadInput) {
  const PlanarRegion region = rectangle_region(RigidTransform::identity(), 0, 0, 1, 1);
  try {
    coverage_metrics(ShotLog{}, region, 0.004);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLog);
  }
  EXPECT_THROW(coverage_metrics(shots_at({Vec3::Zero()}), region, 0.0), Error);
  EXPECT_THROW(strip_region(ShotLog{}, 0.004), Error);
}

TEST(Spacing, MeanAndPopulationVarianceWithinStrips) {
  ShotLog log = shots_at({Vec3(0, 0, 0), Vec3(0.004, 0, 0), Vec3(0.009, 0, 0)});
  const ShotLog other = shots_at({Vec3(0.05, 0.01, 0), Vec3(0.056, 0.01, 0)}, 1);
  log.shots.insert(log.shots.end(), other.shots.begin(), other.shots.end());
  const SpacingStats s = spacing_stats(log);
  // spacings 4, 5 and 6 mm; the jump between strips is left out
  ASSERT_EQ(s.count, 3u);
  EXPECT_NEAR(s.mean, 0.005, 1e-15);
  EXPECT_NEAR(s.variance, 2e-6 / 3.0, 1e-18);
}

TEST(Spacing, StripRegionSpansShots) {
  const std::vector<Vec3> c = {Vec3(0, 0, 0.4), Vec3(0.004, 0, 0.4), Vec3(0.008, 0, 0.4)};
  const ShotLog log = shots_at(c);
  const PlanarRegion region = strip_region(log, 0.004);
  EXPECT_NEAR(polygon_area(region.polygon), 0.012 * 0.004, 1e-15);
  const auto r = coverage_metrics(log, region, 0.004);
  EXPECT_NEAR(r.coverage, grid_oracle(c, 0.002, -0.002, -0.002, 0.010, 0.002, 2000), 2e-3);
}
