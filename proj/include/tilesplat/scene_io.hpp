// Copyright Contributors to the tilesplat Project
// SPDX-License-Identifier: Apache-2.0
//
// Scene and camera file formats.
//
//  * PLY, binary little-endian, 3DGS checkpoint layout: x y z nx ny nz
//    f_dc_0..2 f_rest_* opacity scale_0..2 rot_0..3. Opacity is stored as a
//    logit and scales as natural logs. f_rest is channel-major: coefficient
//    k >= 1 of channel c lives in f_rest_{c * (K - 1) + k - 1} with K the
//    per-channel coefficient count, so a degree-d file carries 3((d+1)^2 - 1)
//    f_rest properties (45 at degree 3).
//  * JSON scene: {"sh_degree": d, "gaussians": [{"center": [..], "scale":
//    [..], "rotation": [w,x,y,z], "opacity": s, "sh": [[r,g,b], ...]}]} with
//    activated (not logit/log) values.
//  * JSON camera: {"position", "target", "up", "fov_y" (degrees), "width",
//    "height", optional "near", optional "background"}.

#pragma once

#include "tilesplat/scene.hpp"

#include "json.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace tilesplat {

static_assert(std::endian::native == std::endian::little,
              "PLY I/O assumes a little-endian host");

namespace detail {

struct PlyProperty {
  std::string name;
  std::string type;
  std::size_t size = 0;
  std::size_t offset = 0;
};

inline std::size_t ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" ||
      t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

template <typename T>
double read_as(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return static_cast<double>(v);
}

inline double ply_read_scalar(const PlyProperty& prop, const char* record) {
  const char* p = record + prop.offset;
  const std::string& t = prop.type;
  if (t == "float" || t == "float32") return read_as<float>(p);
  if (t == "double" || t == "float64") return read_as<double>(p);
  if (t == "char" || t == "int8") return read_as<std::int8_t>(p);
  if (t == "uchar" || t == "uint8") return read_as<std::uint8_t>(p);
  if (t == "short" || t == "int16") return read_as<std::int16_t>(p);
  if (t == "ushort" || t == "uint16") return read_as<std::uint16_t>(p);
  if (t == "int" || t == "int32") return read_as<std::int32_t>(p);
  return read_as<std::uint32_t>(p);
}

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logit(double p) {
  // Opacity 1 has no finite logit; store the closest float below it.
  const double hi = 1.0 - 0x1.0p-24;
  const double lo = 0x1.0p-126;
  p = std::clamp(p, lo, hi);
  return std::log(p / (1.0 - p));
}

}  // namespace detail

// PLY -----------------------------------------------------------------------

inline Scene load_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open PLY file: " + path.string());

  std::string line;
  if (!std::getline(in, line) || line.rfind("ply", 0) != 0)
    throw FormatError("not a PLY file (missing 'ply' magic): " + path.string());

  std::size_t vertex_count = 0;
  bool have_vertex = false, in_vertex = false, binary_le = false;
  std::vector<detail::PlyProperty> props;
  std::size_t stride = 0;
  while (true) {
    if (!std::getline(in, line)) throw FormatError("PLY header: missing end_header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "end_header") break;
    if (tok == "comment" || tok == "obj_info" || tok.empty()) continue;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      binary_le = (fmt == "binary_little_endian");
      if (!binary_le) throw FormatError("PLY header: unsupported format '" + fmt + "'");
    } else if (tok == "element") {
      std::string name;
      std::size_t n = 0;
      ls >> name >> n;
      if (in_vertex || have_vertex) {
        // Trailing elements after the vertex block are ignored.
        in_vertex = false;
        continue;
      }
      if (name != "vertex")
        throw FormatError("PLY header: element '" + name + "' precedes 'vertex'");
      have_vertex = in_vertex = true;
      vertex_count = n;
    } else if (tok == "property") {
      if (!in_vertex) continue;
      std::string type, name;
      ls >> type;
      if (type == "list") throw FormatError("PLY header: list properties on vertex unsupported");
      ls >> name;
      const std::size_t sz = detail::ply_type_size(type);
      if (sz == 0) throw FormatError("PLY header: unknown property type '" + type + "'");
      props.push_back({name, type, sz, stride});
      stride += sz;
    } else {
      throw FormatError("PLY header: unexpected line '" + line + "'");
    }
  }
  if (!binary_le) throw FormatError("PLY header: missing format line");
  if (!have_vertex) throw FormatError("PLY header: missing 'element vertex'");

  std::map<std::string, const detail::PlyProperty*> by_name;
  for (const auto& p : props) by_name[p.name] = &p;
  auto need = [&](const std::string& name) -> const detail::PlyProperty& {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("PLY header: missing property '" + name + "'");
    return *it->second;
  };

  std::size_t rest_count = 0;
  while (by_name.count("f_rest_" + std::to_string(rest_count))) ++rest_count;
  int degree = -1;
  for (int d = 0; d <= kMaxShDegree; ++d)
    if (rest_count == 3 * (sh_coeff_count(d) - 1)) degree = d;
  if (degree < 0)
    throw FormatError("PLY header: f_rest property count " + std::to_string(rest_count) +
                      " matches no SH degree 0..3");

  const std::array<const char*, 3> xyz{"x", "y", "z"};
  std::array<const detail::PlyProperty*, 3> pos{}, dc{}, scl{};
  std::array<const detail::PlyProperty*, 4> rot{};
  for (int a = 0; a < 3; ++a) {
    pos[a] = &need(xyz[a]);
    dc[a] = &need("f_dc_" + std::to_string(a));
    scl[a] = &need("scale_" + std::to_string(a));
  }
  for (int a = 0; a < 4; ++a) rot[a] = &need("rot_" + std::to_string(a));
  const auto& opa = need("opacity");
  std::vector<const detail::PlyProperty*> rest(rest_count);
  for (std::size_t k = 0; k < rest_count; ++k) rest[k] = &need("f_rest_" + std::to_string(k));

  Scene scene;
  scene.sh_degree = degree;
  scene.gaussians.resize(vertex_count);
  const std::size_t per_channel = sh_coeff_count(degree);
  std::vector<char> record(stride);
  for (std::size_t i = 0; i < vertex_count; ++i) {
    if (!in.read(record.data(), static_cast<std::streamsize>(stride)))
      throw FormatError("PLY body truncated at vertex " + std::to_string(i));
    auto value = [&](const detail::PlyProperty* p) {
      const double v = detail::ply_read_scalar(*p, record.data());
      if (!std::isfinite(v))
        throw ValidationError("gaussian " + std::to_string(i) + ": non-finite '" + p->name + "'");
      return v;
    };
    Gaussian3D& g = scene.gaussians[i];
    for (int a = 0; a < 3; ++a) {
      g.center[a] = static_cast<float>(value(pos[a]));
      g.scale[a] = static_cast<float>(std::exp(value(scl[a])));
    }
    for (int a = 0; a < 4; ++a) g.rotation[a] = static_cast<float>(value(rot[a]));
    g.opacity = static_cast<float>(detail::logistic(value(&opa)));
    g.sh_coeffs.assign(per_channel, Vec3f::Zero());
    for (int c = 0; c < 3; ++c) {
      g.sh_coeffs[0][c] = static_cast<float>(value(dc[c]));
      for (std::size_t k = 1; k < per_channel; ++k)
        g.sh_coeffs[k][c] = static_cast<float>(value(rest[c * (per_channel - 1) + k - 1]));
    }
  }
  normalize_and_check(scene);
  return scene;
}

inline void write_ply(const Scene& scene, const std::filesystem::path& path) {
  if (scene.sh_degree < 0 || scene.sh_degree > kMaxShDegree)
    throw ArgumentError("write_ply: sh_degree must be in 0..3");
  const std::size_t per_channel = sh_coeff_count(scene.sh_degree);
  const std::size_t rest_count = 3 * (per_channel - 1);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << "ply\nformat binary_little_endian 1.0\n";
  out << "element vertex " << scene.size() << "\n";
  for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"})
    out << "property float " << n << "\n";
  for (std::size_t k = 0; k < rest_count; ++k) out << "property float f_rest_" << k << "\n";
  out << "property float opacity\n";
  for (int a = 0; a < 3; ++a) out << "property float scale_" << a << "\n";
  for (int a = 0; a < 4; ++a) out << "property float rot_" << a << "\n";
  out << "end_header\n";

  std::vector<float> rec;
  for (std::size_t i = 0; i < scene.size(); ++i) {
    const auto& g = scene.gaussians[i];
    if (g.sh_coeffs.size() != per_channel)
      throw ArgumentError("write_ply: gaussian " + std::to_string(i) +
                          " has wrong SH coefficient count");
    rec.clear();
    rec.insert(rec.end(), {g.center.x(), g.center.y(), g.center.z(), 0.0f, 0.0f, 0.0f});
    for (int c = 0; c < 3; ++c) rec.push_back(g.sh_coeffs[0][c]);
    for (int c = 0; c < 3; ++c)
      for (std::size_t k = 1; k < per_channel; ++k) rec.push_back(g.sh_coeffs[k][c]);
    rec.push_back(static_cast<float>(detail::logit(g.opacity)));
    for (int a = 0; a < 3; ++a) rec.push_back(static_cast<float>(std::log(double(g.scale[a]))));
    for (int a = 0; a < 4; ++a) rec.push_back(g.rotation[a]);
    out.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size() * sizeof(float)));
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

// JSON ----------------------------------------------------------------------

namespace detail {

template <int N>
Eigen::Matrix<float, N, 1> json_vec(const nlohmann::json& j, const char* what, std::size_t index) {
  if (!j.is_array() || j.size() != N)
    throw FormatError("gaussian " + std::to_string(index) + ": '" + what + "' must be an array of " +
                      std::to_string(N) + " numbers");
  Eigen::Matrix<float, N, 1> v;
  for (int a = 0; a < N; ++a) {
    if (!j[a].is_number())
      throw FormatError("gaussian " + std::to_string(index) + ": '" + what + "' must be numeric");
    v[a] = j[a].get<float>();
  }
  return v;
}

template <typename V>
nlohmann::json to_json_array(const V& v) {
  auto arr = nlohmann::json::array();
  for (Eigen::Index a = 0; a < v.size(); ++a) arr.push_back(static_cast<double>(v[a]));
  return arr;
}

inline nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open JSON file: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

}  // namespace detail

inline Scene scene_from_json(const nlohmann::json& root) {
  if (!root.is_object() || !root.contains("gaussians") || !root["gaussians"].is_array())
    throw FormatError("scene JSON: missing 'gaussians' array");
  Scene scene;
  scene.sh_degree = root.value("sh_degree", 0);
  if (scene.sh_degree < 0 || scene.sh_degree > kMaxShDegree)
    throw FormatError("scene JSON: sh_degree must be in 0..3");
  const auto& arr = root["gaussians"];
  scene.gaussians.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& jg = arr[i];
    for (const char* key : {"center", "scale", "rotation", "opacity", "sh"})
      if (!jg.contains(key))
        throw FormatError("gaussian " + std::to_string(i) + ": missing '" + key + "'");
    Gaussian3D g;
    g.center = detail::json_vec<3>(jg["center"], "center", i);
    g.scale = detail::json_vec<3>(jg["scale"], "scale", i);
    g.rotation = detail::json_vec<4>(jg["rotation"], "rotation", i);
    if (!jg["opacity"].is_number())
      throw FormatError("gaussian " + std::to_string(i) + ": 'opacity' must be numeric");
    g.opacity = jg["opacity"].get<float>();
    if (!jg["sh"].is_array())
      throw FormatError("gaussian " + std::to_string(i) + ": 'sh' must be an array");
    g.sh_coeffs.clear();
    for (const auto& c : jg["sh"]) g.sh_coeffs.push_back(detail::json_vec<3>(c, "sh", i));
    scene.gaussians.push_back(std::move(g));
  }
  normalize_and_check(scene);
  return scene;
}

inline nlohmann::json scene_to_json(const Scene& scene) {
  nlohmann::json root;
  root["sh_degree"] = scene.sh_degree;
  auto arr = nlohmann::json::array();
  for (const auto& g : scene.gaussians) {
    nlohmann::json jg;
    jg["center"] = detail::to_json_array(g.center);
    jg["scale"] = detail::to_json_array(g.scale);
    jg["rotation"] = detail::to_json_array(g.rotation);
    jg["opacity"] = static_cast<double>(g.opacity);
    auto sh = nlohmann::json::array();
    for (const auto& c : g.sh_coeffs) sh.push_back(detail::to_json_array(c));
    jg["sh"] = std::move(sh);
    arr.push_back(std::move(jg));
  }
  root["gaussians"] = std::move(arr);
  return root;
}

inline Scene load_json_scene(const std::filesystem::path& path) {
  return scene_from_json(detail::read_json_file(path));
}

inline void write_json_scene(const Scene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << scene_to_json(scene).dump(1) << "\n";
}

/// Dispatches on extension: .ply or .json.
inline Scene load_scene(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return load_ply(path);
  if (ext == ".json") return load_json_scene(path);
  throw FormatError("unknown scene extension '" + ext + "' (expected .ply or .json)");
}

inline void write_scene(const Scene& scene, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply") return write_ply(scene, path);
  if (ext == ".json") return write_json_scene(scene, path);
  throw FormatError("unknown scene extension '" + ext + "' (expected .ply or .json)");
}

// Camera sidecar --------------------------------------------------------------

struct CameraSpec {
  Vec3f position = Vec3f(0, 0, -5);
  Vec3f target = Vec3f::Zero();
  Vec3f up = Vec3f(0, 1, 0);
  float fov_y_deg = 50.0f;
  int width = 256;
  int height = 256;
  float near_plane = kDefaultNearPlane;
  Vec3f background = Vec3f::Zero();

  Camera build() const {
    Camera cam = Camera::look_at(position, target, up, fov_y_deg, width, height);
    cam.near_plane = near_plane;
    cam.background = background;
    validate_camera(cam);
    return cam;
  }
};

inline CameraSpec camera_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("camera JSON: expected an object");
  CameraSpec s;
  try {
    auto vec = [&](const char* key, Vec3f& dst) {
      if (!j.contains(key)) return;
      const auto& a = j.at(key);
      if (!a.is_array() || a.size() != 3)
        throw FormatError(std::string("camera JSON: '") + key + "' must be [x,y,z]");
      for (int i = 0; i < 3; ++i) dst[i] = a[i].get<float>();
    };
    for (const char* key : {"position", "target", "width", "height", "fov_y"})
      if (!j.contains(key)) throw FormatError(std::string("camera JSON: missing '") + key + "'");
    vec("position", s.position);
    vec("target", s.target);
    vec("up", s.up);
    vec("background", s.background);
    s.fov_y_deg = j.at("fov_y").get<float>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.near_plane = j.value("near", kDefaultNearPlane);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("camera JSON: ") + e.what());
  }
  return s;
}

inline nlohmann::json camera_spec_to_json(const CameraSpec& s) {
  return {{"position", detail::to_json_array(s.position)},
          {"target", detail::to_json_array(s.target)},
          {"up", detail::to_json_array(s.up)},
          {"fov_y", s.fov_y_deg},
          {"width", s.width},
          {"height", s.height},
          {"near", s.near_plane},
          {"background", detail::to_json_array(s.background)}};
}

inline Camera load_camera(const std::filesystem::path& path) {
  return camera_spec_from_json(detail::read_json_file(path)).build();
}

inline void write_camera(const CameraSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << camera_spec_to_json(spec).dump(1) << "\n";
}

}  // namespace tilesplat
