// Copyright 2026 The spwz Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include "spwz/scene_io.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "spwz/byte_io.hpp"
#include "spwz/rng.hpp"

namespace spwz {

double Aabb::diagonal() const {
  double d2 = 0;
  for (int k = 0; k < 3; ++k) d2 += (max[k] - min[k]) * (max[k] - min[k]);
  return std::sqrt(d2);
}

std::array<double, 3> Aabb::center() const {
  return {0.5 * (min[0] + max[0]), 0.5 * (min[1] + max[1]), 0.5 * (min[2] + max[2])};
}

const std::vector<std::string>& ply_property_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v{"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"};
    for (int i = 0; i < kShRestWidth; ++i) v.push_back("f_rest_" + std::to_string(i));
    v.push_back("opacity");
    for (int i = 0; i < 3; ++i) v.push_back("scale_" + std::to_string(i));
    for (int i = 0; i < 4; ++i) v.push_back("rot_" + std::to_string(i));
    return v;
  }();
  return names;
}

namespace {

int ply_type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "float" || t == "int32" || t == "uint32" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

struct PlyProperty {
  std::string type;
  std::size_t offset = 0;
};

// Row-layout of one vertex: where each scene field lives.
struct VertexLayout {
  std::size_t pos[3], dc[3], rest[kShRestWidth], opacity, scale[3], rot[4];
};

float load_f32(const std::uint8_t* p) {
  std::uint32_t v = std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 |
                    std::uint32_t(p[3]) << 24;
  return std::bit_cast<float>(v);
}

}  // namespace

GaussianScene parse_ply(const std::vector<std::uint8_t>& bytes) {
  static const std::string kEnd = "end_header\n";
  auto it = std::search(bytes.begin(), bytes.end(), kEnd.begin(), kEnd.end());
  if (it == bytes.end()) throw FormatError("PLY: missing end_header");
  const std::size_t header_len = std::size_t(it - bytes.begin()) + kEnd.size();
  std::istringstream header(std::string(bytes.begin(), bytes.begin() + std::ptrdiff_t(header_len)));

  std::string line;
  std::getline(header, line);
  if (line != "ply") throw FormatError("PLY: bad magic");

  bool have_format = false;
  bool in_vertex = false;
  bool seen_vertex = false;
  std::size_t vertex_count = 0;
  std::size_t stride = 0;
  std::map<std::string, PlyProperty> props;
  while (std::getline(header, line)) {
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "format") {
      std::string fmt, ver;
      ls >> fmt >> ver;
      if (fmt != "binary_little_endian") throw FormatError("PLY: format must be binary_little_endian");
      have_format = true;
    } else if (kw == "element") {
      std::string name;
      std::size_t n = 0;
      ls >> name >> n;
      if (name != "vertex" || seen_vertex) throw FormatError("PLY: wrong element type '" + name + "'");
      seen_vertex = in_vertex = true;
      vertex_count = n;
    } else if (kw == "property") {
      if (!in_vertex) throw FormatError("PLY: property outside vertex element");
      std::string type, name;
      ls >> type >> name;
      if (type == "list") throw FormatError("PLY: list property not supported: " + name);
      int sz = ply_type_size(type);
      if (sz == 0) throw FormatError("PLY: unknown type '" + type + "' for property " + name);
      props[name] = {type, stride};
      stride += std::size_t(sz);
    } else if (kw == "comment" || kw == "obj_info" || kw.empty()) {
      continue;
    } else if (kw == "end_header") {
      break;
    } else {
      throw FormatError("PLY: unexpected header line '" + line + "'");
    }
  }
  if (!have_format) throw FormatError("PLY: missing format line");
  if (!seen_vertex) throw FormatError("PLY: wrong element type (no vertex element)");

  auto offset_of = [&](const std::string& name) {
    auto p = props.find(name);
    if (p == props.end()) throw FormatError("PLY: missing property " + name);
    if (p->second.type != "float" && p->second.type != "float32")
      throw FormatError("PLY: property " + name + " must be float");
    return p->second.offset;
  };
  VertexLayout lay{};
  const char* axes[] = {"x", "y", "z"};
  for (int k = 0; k < 3; ++k) lay.pos[k] = offset_of(axes[k]);
  for (int k = 0; k < 3; ++k) offset_of(std::string("n") + axes[k]);
  for (int k = 0; k < 3; ++k) lay.dc[k] = offset_of("f_dc_" + std::to_string(k));
  for (int k = 0; k < kShRestWidth; ++k) lay.rest[k] = offset_of("f_rest_" + std::to_string(k));
  lay.opacity = offset_of("opacity");
  for (int k = 0; k < 3; ++k) lay.scale[k] = offset_of("scale_" + std::to_string(k));
  for (int k = 0; k < 4; ++k) lay.rot[k] = offset_of("rot_" + std::to_string(k));

  const std::size_t payload = bytes.size() - header_len;
  if (vertex_count != 0 && payload / stride < vertex_count) {
    throw FormatError("PLY: truncated payload (" + std::to_string(payload) + " bytes for " +
                      std::to_string(vertex_count) + " vertices)");
  }

  GaussianScene s = GaussianScene::with_count(vertex_count, 3);
  const std::uint8_t* base = bytes.data() + header_len;
  for (std::size_t i = 0; i < vertex_count; ++i) {
    const std::uint8_t* row = base + i * stride;
    for (int k = 0; k < 3; ++k) s.positions[3 * i + k] = load_f32(row + lay.pos[k]);
    for (int k = 0; k < 3; ++k) s.sh_dc[3 * i + k] = load_f32(row + lay.dc[k]);
    for (int k = 0; k < kShRestWidth; ++k) s.sh_rest[kShRestWidth * i + k] = load_f32(row + lay.rest[k]);
    s.opacity_logits[i] = load_f32(row + lay.opacity);
    for (int k = 0; k < 3; ++k) s.log_scales[3 * i + k] = load_f32(row + lay.scale[k]);
    for (int k = 0; k < 4; ++k) s.rotation_params[4 * i + k] = load_f32(row + lay.rot[k]);
  }
  return s;
}

std::vector<std::uint8_t> serialize_ply(const GaussianScene& scene) {
  std::ostringstream h;
  h << "ply\nformat binary_little_endian 1.0\nelement vertex " << scene.count << "\n";
  for (const auto& name : ply_property_names()) h << "property float " << name << "\n";
  h << "end_header\n";
  const std::string header = h.str();

  ByteWriter w;
  w.tag(header);
  for (std::size_t i = 0; i < scene.count; ++i) {
    for (int k = 0; k < 3; ++k) w.f32(float(scene.positions[3 * i + k]));
    for (int k = 0; k < 3; ++k) w.f32(0.0f);
    for (int k = 0; k < 3; ++k) w.f32(float(scene.sh_dc[3 * i + k]));
    for (int k = 0; k < kShRestWidth; ++k) w.f32(float(scene.sh_rest[kShRestWidth * i + k]));
    w.f32(float(scene.opacity_logits[i]));
    for (int k = 0; k < 3; ++k) w.f32(float(scene.log_scales[3 * i + k]));
    for (int k = 0; k < 4; ++k) w.f32(float(scene.rotation_params[4 * i + k]));
  }
  return w.take();
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

GaussianScene read_ply(const std::filesystem::path& path) { return parse_ply(read_file_bytes(path)); }

void write_ply(const GaussianScene& scene, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_ply(scene));
}

namespace {

std::array<double, 9> orthonormalize(const std::array<double, 9>& r, int line_no) {
  Eigen::Matrix3d m;
  m << r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8];
  const double err = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (!(err <= 1e-3) || det <= 0) {
    throw PoseError("camera line " + std::to_string(line_no) + ": rotation is not orthonormal");
  }
  if (err <= 1e-12 && std::abs(det - 1.0) <= 1e-12) return r;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d q = svd.matrixU() * svd.matrixV().transpose();
  return {q(0, 0), q(0, 1), q(0, 2), q(1, 0), q(1, 1), q(1, 2), q(2, 0), q(2, 1), q(2, 2)};
}

}  // namespace

CameraSet parse_cameras(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool header = false;
  CameraSet out;
  std::set<std::string> names;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    if (!header) {
      std::string magic;
      int version = 0;
      ls >> magic >> version;
      if (magic != "SPWZCAM" || version != 1) throw FormatError("camera file: expected 'SPWZCAM 1' header");
      header = true;
      continue;
    }
    NamedCamera nc;
    Camera& c = nc.camera;
    ls >> nc.name >> c.width >> c.height >> c.fx >> c.fy >> c.cx >> c.cy;
    for (double& v : c.rotation) ls >> v;
    for (double& v : c.translation) ls >> v;
    if (!ls) throw FormatError("camera file line " + std::to_string(line_no) + ": expected 19 fields");
    std::string extra;
    if (ls >> extra) throw FormatError("camera file line " + std::to_string(line_no) + ": trailing fields");
    if (c.width <= 0 || c.height <= 0 || !(c.fx > 0) || !(c.fy > 0)) {
      throw FormatError("camera file line " + std::to_string(line_no) + ": invalid intrinsics");
    }
    c.rotation = orthonormalize(c.rotation, line_no);
    if (!names.insert(nc.name).second) throw FormatError("camera file: duplicate camera name '" + nc.name + "'");
    out.push_back(std::move(nc));
  }
  if (!header) throw FormatError("camera file: missing 'SPWZCAM 1' header");
  return out;
}

std::string serialize_cameras(const CameraSet& cameras) {
  std::string out = "SPWZCAM 1\n# name width height fx fy cx cy r00 r01 r02 r10 r11 r12 r20 r21 r22 tx ty tz\n";
  char buf[64];
  for (const auto& nc : cameras) {
    const Camera& c = nc.camera;
    out += nc.name;
    out += ' ' + std::to_string(c.width) + ' ' + std::to_string(c.height);
    auto put = [&](double v) {
      std::snprintf(buf, sizeof buf, " %.17g", v);
      out += buf;
    };
    put(c.fx);
    put(c.fy);
    put(c.cx);
    put(c.cy);
    for (double v : c.rotation) put(v);
    for (double v : c.translation) put(v);
    out += '\n';
  }
  return out;
}

CameraSet read_cameras(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open camera file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_cameras(ss.str());
}

void write_cameras(const CameraSet& cameras, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << serialize_cameras(cameras);
}

Camera look_at(const std::array<double, 3>& eye, const std::array<double, 3>& target,
               const std::array<double, 3>& up, int width, int height, double focal) {
  Eigen::Vector3d e(eye[0], eye[1], eye[2]);
  Eigen::Vector3d t(target[0], target[1], target[2]);
  Eigen::Vector3d u(up[0], up[1], up[2]);
  Eigen::Vector3d z = (t - e).normalized();
  Eigen::Vector3d x = z.cross(u).normalized();
  Eigen::Vector3d y = z.cross(x);
  Camera c;
  c.width = width;
  c.height = height;
  c.fx = c.fy = focal;
  c.cx = 0.5 * width;
  c.cy = 0.5 * height;
  c.rotation = {x[0], x[1], x[2], y[0], y[1], y[2], z[0], z[1], z[2]};
  for (int r = 0; r < 3; ++r) c.translation[r] = -(c.rotation[3 * r] * e[0] + c.rotation[3 * r + 1] * e[1] +
                                                   c.rotation[3 * r + 2] * e[2]);
  return c;
}

std::pair<GaussianScene, CameraSet> generate_synthetic(const SyntheticSceneSpec& spec) {
  SplitMix64 rng(spec.seed);
  const std::size_t n = spec.n_gaussians;
  GaussianScene s = GaussianScene::with_count(n, spec.sh_degree);
  const double diag = spec.aabb.diagonal();
  const double lo = std::log(0.01 * diag), hi = std::log(0.05 * diag);
  auto f32 = [](double v) { return double(float(v)); };
  const int rest_per_channel = spec.sh_degree == 0 ? 0 : (spec.sh_degree + 1) * (spec.sh_degree + 1) - 1;

  for (std::size_t i = 0; i < n; ++i) {
    for (int k = 0; k < 3; ++k) s.positions[3 * i + k] = f32(rng.uniform(spec.aabb.min[k], spec.aabb.max[k]));
    for (int k = 0; k < 3; ++k) s.log_scales[3 * i + k] = f32(rng.uniform(lo, hi));
    double q[4], qn = 0;
    for (double& v : q) {
      v = rng.normal();
      qn += v * v;
    }
    qn = std::sqrt(qn);
    for (int k = 0; k < 4; ++k) s.rotation_params[4 * i + k] = f32(qn > 0 ? q[k] / qn : (k == 0 ? 1.0 : 0.0));
    s.opacity_logits[i] = f32(logit(rng.uniform(0.3, 0.95)));
    for (int k = 0; k < 3; ++k) s.sh_dc[3 * i + k] = f32(rng.uniform(-1.0, 1.0));
    for (int c = 0; c < 3; ++c)
      for (int k = 0; k < rest_per_channel; ++k)
        s.sh_rest[kShRestWidth * i + kShRestPerChannel * c + k] = f32(rng.uniform(-0.2, 0.2));
  }

  CameraSet cams;
  const auto center = spec.aabb.center();
  const double radius = 1.2 * diag;
  const double focal = 1.08 * spec.width;
  for (int k = 0; k < spec.n_cameras; ++k) {
    const double theta = 2.0 * std::numbers::pi * k / std::max(1, spec.n_cameras);
    std::array<double, 3> eye{center[0] + radius * std::cos(theta), center[1] + 0.3 * radius,
                              center[2] + radius * std::sin(theta)};
    char name[32];
    std::snprintf(name, sizeof name, "cam%03d", k);
    cams.push_back({name, look_at(eye, center, {0, 1, 0}, spec.width, spec.height, focal)});
  }
  return {std::move(s), std::move(cams)};
}

Aabb scene_aabb(const GaussianScene& scene) {
  Aabb box{{0, 0, 0}, {0, 0, 0}};
  if (scene.count == 0) return box;
  for (int k = 0; k < 3; ++k) box.min[k] = box.max[k] = scene.positions[k];
  for (std::size_t i = 1; i < scene.count; ++i) {
    for (int k = 0; k < 3; ++k) {
      box.min[k] = std::min(box.min[k], scene.positions[3 * i + k]);
      box.max[k] = std::max(box.max[k], scene.positions[3 * i + k]);
    }
  }
  return box;
}

std::vector<std::uint8_t> encode_ppm(const ImageRGB& img) {
  std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(out.size() + img.data.size());
  for (double v : img.data) out.push_back(std::uint8_t(std::lround(255.0 * std::clamp(v, 0.0, 1.0))));
  return out;
}

}  // namespace spwz
