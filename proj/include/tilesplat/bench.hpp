// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the CLI. Each command reads its inputs,
// runs the pipeline and writes artifacts; the CLI only parses flags and maps
// exceptions to exit codes.
//
// Timing CSV (bench, render --csv): one row per run with columns
//   scene, mode, alpha_low, gaussians, culled, pairs,
//   t_preprocess, t_inclusivesum, t_duplicate, t_sort, t_ranges, t_render,
//   e_g, e_n, e_p, fps
// followed, for bench only, by the per-stage minima
//   tmin_preprocess ... tmin_render.
// Durations are milliseconds; bench reports medians over the repetitions.

#pragma once

#include "tilesplat/image_io.hpp"
#include "tilesplat/metrics.hpp"
#include "tilesplat/pipeline.hpp"
#include "tilesplat/scene_io.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace tilesplat::bench {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kOk = 0, kUsage = 2, kInternal = 3 };

struct Inputs {
  std::filesystem::path scene;
  std::filesystem::path camera;  // empty: CameraSpec defaults
  RenderConfig config;
};

inline Camera load_camera_or_default(const std::filesystem::path& p) {
  return p.empty() ? CameraSpec{}.build() : load_camera(p);
}

inline std::string format_double(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Timing rows ---------------------------------------------------------------

struct TimingRow {
  std::string scene;
  CullMode mode = CullMode::baseline;
  float alpha_low = kAlphaLow;
  std::size_t gaussians = 0;
  std::size_t culled = 0;
  std::size_t pairs = 0;
  std::array<double, kStageCount> stage_ms{};
  double e_g = 0.0, e_n = 0.0, e_p = 0.0;
  double fps = 0.0;
  std::optional<std::array<double, kStageCount>> stage_min_ms;
};

inline std::string timing_header(bool with_min) {
  std::string h = "scene,mode,alpha_low,gaussians,culled,pairs";
  for (auto n : kStageNames) h += ",t_" + std::string(n);
  h += ",e_g,e_n,e_p,fps";
  if (with_min)
    for (auto n : kStageNames) h += ",tmin_" + std::string(n);
  return h;
}

inline std::string timing_line(const TimingRow& r) {
  std::ostringstream os;
  os << r.scene << ',' << to_string(r.mode) << ',' << format_double(r.alpha_low, 9) << ','
     << r.gaussians << ',' << r.culled << ',' << r.pairs;
  for (double t : r.stage_ms) os << ',' << format_double(t);
  os << ',' << format_double(r.e_g) << ',' << format_double(r.e_n) << ',' << format_double(r.e_p)
     << ',' << format_double(r.fps);
  if (r.stage_min_ms)
    for (double t : *r.stage_min_ms) os << ',' << format_double(t);
  return os.str();
}

inline TimingRow row_from_stats(const std::string& scene, const RenderConfig& cfg,
                                const RenderStats& s) {
  TimingRow r;
  r.scene = scene;
  r.mode = cfg.mode;
  r.alpha_low = cfg.alpha_low;
  r.gaussians = s.gaussians;
  r.culled = s.culled_gaussians;
  r.pairs = s.pair_count;
  for (std::size_t i = 0; i < kStageCount; ++i) r.stage_ms[i] = 1e3 * s.stage_seconds[i];
  r.e_g = 1e3 * s.e_g();
  r.e_n = 1e3 * s.e_n();
  r.e_p = 1e3 * s.e_p();
  r.fps = s.total() > 0.0 ? 1.0 / s.total() : 0.0;
  return r;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << text;
}

/// PNG unless the extension is .ppm.
inline void write_image(const Image& img, const std::filesystem::path& path) {
  if (path.extension() == ".ppm") write_ppm(img, path);
  else write_png(img, path);
}

/// 16-bit PGM for .pgm, normalized grayscale PNG otherwise.
inline void write_loadmap(const LoadMap& map, const std::filesystem::path& path) {
  if (path.extension() == ".pgm") write_load_pgm16(map, path);
  else write_load_png(map, path);
}

// render --------------------------------------------------------------------

struct RenderArgs {
  Inputs in;
  std::filesystem::path output;   // image
  std::filesystem::path loadmap;  // optional
  std::filesystem::path csv;      // optional
};

inline RasterResult cmd_render(const RenderArgs& a, std::ostream& log) {
  const Scene scene = load_scene(a.in.scene);
  const Camera cam = load_camera_or_default(a.in.camera);
  RasterResult r = rasterize(scene, cam, a.in.config);
  if (!a.output.empty()) write_image(r.output.image, a.output);
  if (!a.loadmap.empty()) write_loadmap(r.output.load, a.loadmap);
  const TimingRow row = row_from_stats(a.in.scene.string(), a.in.config, r.stats);
  if (!a.csv.empty()) write_text(a.csv, timing_header(false) + "\n" + timing_line(row) + "\n");
  log << "rendered " << scene.size() << " gaussians (" << r.stats.culled_gaussians
      << " culled), " << r.stats.pair_count << " pairs, mode " << to_string(a.in.config.mode)
      << "\n";
  return r;
}

// compare -------------------------------------------------------------------

struct CompareRow {
  CullMode mode;
  std::size_t pairs;
  double e_g, e_n, e_p;  // ms
  std::uint64_t image_hash;
  double psnr_vs_first;
  double load_std;
};

struct CompareReport {
  std::vector<CompareRow> rows;
  bool pairs_monotone = true;
  bool images_identical = true;
};

inline std::string compare_header() {
  return "mode,pairs,e_g,e_n,e_p,image_hash,psnr_vs_first,load_std";
}

inline std::string compare_line(const CompareRow& r) {
  std::ostringstream os;
  const double p = std::isinf(r.psnr_vs_first) ? kPsnrIdenticalSentinel : r.psnr_vs_first;
  os << to_string(r.mode) << ',' << r.pairs << ',' << format_double(r.e_g) << ','
     << format_double(r.e_n) << ',' << format_double(r.e_p) << ',' << hex64(r.image_hash) << ','
     << format_double(p, 9) << ',' << format_double(r.load_std, 12);
  return os.str();
}

/// Renders under every mode and checks that pair counts shrink in the order
/// baseline >= circle >= aabb.
inline CompareReport compare_modes(const Scene& scene, const Camera& cam,
                                   const std::vector<CullMode>& modes, RenderConfig cfg) {
  if (modes.size() < 2) throw ArgumentError("compare: at least two modes are required");
  CompareReport rep;
  Image first;
  std::array<std::optional<std::size_t>, 3> pairs_by_mode{};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    cfg.mode = modes[i];
    const RasterResult r = rasterize(scene, cam, cfg);
    if (i == 0) first = r.output.image;
    CompareRow row{modes[i],
                   r.stats.pair_count,
                   1e3 * r.stats.e_g(),
                   1e3 * r.stats.e_n(),
                   1e3 * r.stats.e_p(),
                   image_hash(r.output.image),
                   psnr(first, r.output.image),
                   load_loss(r.output.load)};
    rep.images_identical = rep.images_identical && bitwise_equal(r.output.image, first);
    pairs_by_mode[static_cast<std::size_t>(modes[i])] = row.pairs;
    rep.rows.push_back(row);
  }
  std::optional<std::size_t> prev;
  for (const auto& p : pairs_by_mode) {
    if (!p) continue;
    if (prev && *p > *prev) rep.pairs_monotone = false;
    prev = p;
  }
  return rep;
}

struct CompareArgs {
  Inputs in;
  std::vector<CullMode> modes;
  std::filesystem::path csv;
};

inline CompareReport cmd_compare(const CompareArgs& a, std::ostream& log) {
  if (a.modes.size() < 2) throw ArgumentError("compare: at least two modes are required");
  const Scene scene = load_scene(a.in.scene);
  const Camera cam = load_camera_or_default(a.in.camera);
  CompareReport rep = compare_modes(scene, cam, a.modes, a.in.config);
  std::ostringstream csv;
  csv << compare_header() << "\n";
  for (const auto& r : rep.rows) csv << compare_line(r) << "\n";
  if (!a.csv.empty()) write_text(a.csv, csv.str());
  log << csv.str();
  const double base = static_cast<double>(rep.rows.front().pairs);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const double red = base > 0 ? 100.0 * (1.0 - rep.rows[i].pairs / base) : 0.0;
    log << to_string(rep.rows[i].mode) << ": " << format_double(red, 4) << "% fewer pairs than "
        << to_string(rep.rows.front().mode) << "\n";
  }
  log << "images identical: " << (rep.images_identical ? "yes" : "NO") << "\n";
  if (!rep.pairs_monotone)
    throw InternalError("compare: pair counts are not monotone (baseline >= circle >= aabb)");
  return rep;
}

// loadmap -------------------------------------------------------------------

struct LoadmapArgs {
  Inputs in;
  std::filesystem::path output;  // normalized PNG (or .pgm)
  std::filesystem::path csv;
};

inline std::string loadstats_header() { return "scene,mode,mean,std,min,max"; }

inline LoadStats cmd_loadmap(const LoadmapArgs& a, std::ostream& log) {
  const Scene scene = load_scene(a.in.scene);
  const Camera cam = load_camera_or_default(a.in.camera);
  const RasterResult r = rasterize(scene, cam, a.in.config);
  if (!a.output.empty()) write_loadmap(r.output.load, a.output);
  const LoadStats s = load_stats(r.output.load);
  std::ostringstream line;
  line << a.in.scene.string() << ',' << to_string(a.in.config.mode) << ','
       << format_double(s.mean, 12) << ',' << format_double(s.std, 12) << ',' << s.min << ','
       << s.max;
  if (!a.csv.empty()) write_text(a.csv, loadstats_header() + "\n" + line.str() + "\n");
  log << loadstats_header() << "\n" << line.str() << "\n";
  return s;
}

// bench ---------------------------------------------------------------------

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// One warm-up render, then `repetitions` timed renders.
inline TimingRow bench_scene(const Scene& scene, const Camera& cam, const RenderConfig& cfg,
                             int repetitions, const std::string& label) {
  if (repetitions < 1) throw ArgumentError("bench: repetitions must be >= 1");
  const RasterResult warm = rasterize(scene, cam, cfg);
  std::array<std::vector<double>, kStageCount> per_stage;
  std::vector<double> e_g, e_n, e_p, total;
  for (int r = 0; r < repetitions; ++r) {
    const RenderStats s = rasterize(scene, cam, cfg).stats;
    for (std::size_t i = 0; i < kStageCount; ++i) per_stage[i].push_back(1e3 * s.stage_seconds[i]);
    e_g.push_back(1e3 * s.e_g());
    e_n.push_back(1e3 * s.e_n());
    e_p.push_back(1e3 * s.e_p());
    total.push_back(s.total());
  }
  TimingRow row = row_from_stats(label, cfg, warm.stats);
  std::array<double, kStageCount> mins{};
  for (std::size_t i = 0; i < kStageCount; ++i) {
    row.stage_ms[i] = median(per_stage[i]);
    mins[i] = *std::min_element(per_stage[i].begin(), per_stage[i].end());
  }
  row.stage_min_ms = mins;
  row.e_g = median(e_g);
  row.e_n = median(e_n);
  row.e_p = median(e_p);
  const double med_total = median(total);
  row.fps = med_total > 0.0 ? 1.0 / med_total : 0.0;
  return row;
}

struct BenchArgs {
  Inputs in;
  int repetitions = 5;
  std::filesystem::path csv;
};

inline TimingRow cmd_bench(const BenchArgs& a, std::ostream& log) {
  if (a.repetitions < 1) throw ArgumentError("bench: repetitions must be >= 1");
  const Scene scene = load_scene(a.in.scene);
  const Camera cam = load_camera_or_default(a.in.camera);
  const TimingRow row = bench_scene(scene, cam, a.in.config, a.repetitions, a.in.scene.string());
  const std::string text = timing_header(true) + "\n" + timing_line(row) + "\n";
  if (!a.csv.empty()) write_text(a.csv, text);
  log << text;
  return row;
}

// gen-scene -----------------------------------------------------------------

struct GenSceneArgs {
  std::uint64_t seed = 0;
  std::size_t count = 0;
  SyntheticSpec spec;
  std::filesystem::path output;
};

inline Scene cmd_gen_scene(const GenSceneArgs& a, std::ostream& log) {
  if (a.output.empty()) throw ArgumentError("gen-scene: --output is required");
  Scene s = generate_synthetic(a.seed, a.count, a.spec);
  write_scene(s, a.output);
  log << "wrote " << s.size() << " gaussians to " << a.output.string() << "\n";
  return s;
}

}  // namespace tilesplat::bench
