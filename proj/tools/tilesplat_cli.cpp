// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// tilesplat: render, compare culling modes, dump load maps, benchmark and
// generate synthetic scenes.

#include "tilesplat/bench.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace ts = tilesplat;
namespace tb = tilesplat::bench;

namespace {

struct CommonFlags {
  std::string scene;
  std::string camera;
  std::string mode = "aabb";
  float alpha_low = ts::kAlphaLow;
  unsigned threads = 1;

  void add_to(CLI::App* app, bool with_mode = true) {
    app->add_option("--scene", scene, "Scene file (.ply or .json)")->required();
    app->add_option("--camera", camera, "Camera JSON (look-at form); default camera if omitted");
    if (with_mode)
      app->add_option("--mode", mode, "Culling mode: baseline | circle | aabb");
    app->add_option("--alpha-low", alpha_low, "Minimum splatting opacity")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  }

  tb::Inputs inputs() const {
    tb::Inputs in;
    in.scene = scene;
    in.camera = camera;
    const auto m = ts::parse_cull_mode(mode);
    if (!m) throw ts::ArgumentError("invalid mode '" + mode + "' (expected baseline|circle|aabb)");
    in.config.mode = *m;
    in.config.alpha_low = alpha_low;
    in.config.threads = threads;
    return in;
  }
};

std::vector<ts::CullMode> parse_modes(const std::vector<std::string>& names) {
  std::vector<ts::CullMode> out;
  for (const auto& n : names) {
    // Accept both "--modes a b" and "--modes a,b".
    std::stringstream ss(n);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto m = ts::parse_cull_mode(item);
      if (!m) throw ts::ArgumentError("invalid mode '" + item + "'");
      out.push_back(*m);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tile-based Gaussian splatting rasterizer with early culling"};
  app.require_subcommand(1);

  CommonFlags render_flags;
  tb::RenderArgs render_args;
  std::string render_out, render_load, render_csv;
  auto* render = app.add_subcommand("render", "Render a scene to an image");
  render_flags.add_to(render);
  render->add_option("--output", render_out, "Image path (.png or .ppm)")->required();
  render->add_option("--loadmap", render_load, "Load map path (.png normalized, .pgm 16-bit)");
  render->add_option("--csv", render_csv, "Stats CSV path");

  CommonFlags compare_flags;
  std::vector<std::string> compare_modes{"baseline", "circle", "aabb"};
  std::string compare_csv;
  auto* compare = app.add_subcommand("compare", "Render under several culling modes");
  compare_flags.add_to(compare, false);
  compare->add_option("--modes", compare_modes, "Modes to compare (>= 2)")->capture_default_str();
  compare->add_option("--csv", compare_csv, "Comparison CSV path");

  CommonFlags loadmap_flags;
  std::string loadmap_out, loadmap_csv;
  auto* loadmap = app.add_subcommand("loadmap", "Write the per-pixel load map and its stats");
  loadmap_flags.add_to(loadmap);
  loadmap->add_option("--output", loadmap_out, "Load image path (.png or .pgm)")->required();
  loadmap->add_option("--csv", loadmap_csv, "Load stats CSV path");

  CommonFlags bench_flags;
  int repetitions = 5;
  std::string bench_csv;
  auto* bench = app.add_subcommand("bench", "Time the six pipeline stages");
  bench_flags.add_to(bench);
  bench->add_option("--repetitions", repetitions, "Timed repetitions after one warm-up")
      ->capture_default_str();
  bench->add_option("--csv", bench_csv, "Timing CSV path");

  tb::GenSceneArgs gen_args;
  std::string gen_out;
  bool axis_aligned = false;
  auto* gen = app.add_subcommand("gen-scene", "Generate a seeded synthetic scene");
  gen->add_option("--seed", gen_args.seed, "RNG seed")->required();
  gen->add_option("--count", gen_args.count, "Number of Gaussians")->required();
  gen->add_option("--output", gen_out, "Scene path (.ply or .json)")->required();
  gen->add_option("--extent", gen_args.spec.extent, "Half side of the sampling cube")
      ->capture_default_str();
  gen->add_option("--scale-min", gen_args.spec.scale_min)->capture_default_str();
  gen->add_option("--scale-max", gen_args.spec.scale_max)->capture_default_str();
  gen->add_option("--anisotropy-min", gen_args.spec.anisotropy_min)->capture_default_str();
  gen->add_option("--anisotropy-max", gen_args.spec.anisotropy_max)->capture_default_str();
  gen->add_option("--opacity-min", gen_args.spec.opacity_min)->capture_default_str();
  gen->add_option("--opacity-max", gen_args.spec.opacity_max)->capture_default_str();
  gen->add_flag("--axis-aligned", axis_aligned, "Align long axes with world x or y");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? tb::kOk : tb::kUsage;
  }

  try {
    if (*render) {
      render_args.in = render_flags.inputs();
      render_args.output = render_out;
      render_args.loadmap = render_load;
      render_args.csv = render_csv;
      tb::cmd_render(render_args, std::cout);
    } else if (*compare) {
      tb::CompareArgs a;
      a.in = compare_flags.inputs();
      a.modes = parse_modes(compare_modes);
      a.csv = compare_csv;
      tb::cmd_compare(a, std::cout);
    } else if (*loadmap) {
      tb::LoadmapArgs a;
      a.in = loadmap_flags.inputs();
      a.output = loadmap_out;
      a.csv = loadmap_csv;
      tb::cmd_loadmap(a, std::cout);
    } else if (*bench) {
      tb::BenchArgs a;
      a.in = bench_flags.inputs();
      a.repetitions = repetitions;
      a.csv = bench_csv;
      tb::cmd_bench(a, std::cout);
    } else if (*gen) {
      gen_args.output = gen_out;
      gen_args.spec.rotation = axis_aligned ? ts::RotationMode::axis_aligned : ts::RotationMode::random;
      tb::cmd_gen_scene(gen_args, std::cout);
    }
  } catch (const ts::InternalError& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return tb::kInternal;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tb::kUsage;
  }
  return tb::kOk;
}
