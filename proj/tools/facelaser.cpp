// Command-line front end: register, segment, plan, simulate, report.

#include <CLI11.hpp>

#include <iostream>

#include "facelaser/cli.hpp"

namespace fl = facelaser;

int main(int argc, char** argv) {
  CLI::App app{"Laser-shot coverage planning and simulation over facial point clouds"};
  app.require_subcommand(1);

  fl::cli::GlobalOptions g;
  std::uint64_t seed = 0;
  app.add_option("--config", g.config_path, "JSON config file");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  app.add_option("--set", g.overrides, "config override key=value (repeatable)");
  app.add_option("--out", g.out_dir, "output directory");

  std::vector<std::string> views;
  std::string poses;
  auto* reg = app.add_subcommand("register", "merge scan views into one cloud");
  reg->add_option("views", views, "view PLY files")->required();
  reg->add_option("--poses", poses, "JSON array of view poses");

  std::string cloud, landmarks, camera, polygons;
  std::vector<double> crop;
  auto* seg = app.add_subcommand("segment", "split a face cloud into seven regions");
  seg->add_option("--cloud", cloud, "face PLY")->required();
  seg->add_option("--landmarks", landmarks, "68-point landmark JSON")->required();
  seg->add_option("--camera", camera, "camera JSON")->required();
  seg->add_option("--polygons", polygons, "polygon override JSON");
  seg->add_option("--crop-box", crop, "xmin ymin zmin xmax ymax zmax")->expected(6);

  std::vector<std::string> regions;
  auto* plan = app.add_subcommand("plan", "plan coverage paths over region clouds");
  plan->add_option("regions", regions, "region PLY files")->required();

  std::string paths, face, motion, region_ply, shots, trajectory;
  std::vector<double> rect;
  auto* sim = app.add_subcommand("simulate", "execute paths and record shots");
  sim->add_option("--paths", paths, "path JSON")->required();
  sim->add_option("--face", face, "face PLY for proximity sensing");
  sim->add_option("--motion", motion, "head motion script JSON");
  sim->add_option("--region", region_ply, "operable region PLY");
  sim->add_option("--region-rect", rect, "x0 y0 x1 y1 in the camera x-y plane")->expected(4);

  auto* rep = app.add_subcommand("report", "coverage statistics from a shot log");
  rep->add_option("--shots", shots, "shot CSV")->required();
  rep->add_option("--trajectory", trajectory, "trajectory CSV for the path length");
  rep->add_option("--region", region_ply, "operable region PLY");
  rep->add_option("--region-rect", rect, "x0 y0 x1 y1 in the camera x-y plane")->expected(4);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (*seed_opt) g.seed = seed;

  fl::cli::RegionOptions ro;
  ro.region_ply = region_ply;
  if (rect.size() == 4) ro.rect = std::array<double, 4>{rect[0], rect[1], rect[2], rect[3]};

  try {
    std::string summary;
    if (*reg) {
      summary = fl::cli::cmd_register(g, views, poses);
    } else if (*seg) {
      std::optional<std::array<double, 6>> box;
      if (crop.size() == 6) box = std::array<double, 6>{crop[0], crop[1], crop[2], crop[3], crop[4], crop[5]};
      summary = fl::cli::cmd_segment(g, cloud, landmarks, camera, polygons, box);
    } else if (*plan) {
      summary = fl::cli::cmd_plan(g, regions);
    } else if (*sim) {
      summary = fl::cli::cmd_simulate(g, paths, face, motion, ro);
    } else if (*rep) {
      summary = fl::cli::cmd_report(g, shots, trajectory, ro);
    }
    std::cout << summary << (summary.empty() || summary.back() != '\n' ? "\n" : "");
    return 0;
  } catch (const fl::cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
