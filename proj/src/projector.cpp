// Copyright 2026 The xnaf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xnaf/projector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "xnaf/error.hpp"
#include "xnaf/image_io.hpp"
#include "xnaf/io.hpp"
#include "xnaf/rng.hpp"

namespace xnaf {

std::vector<RaySample> midpoint_samples(double t_near, double t_far, double step) {
  if (!(step > 0.0)) throw Error(Errc::InvalidArgument, "step must be positive");
  std::vector<RaySample> out;
  if (!(t_far > t_near)) return out;
  out.reserve(std::size_t((t_far - t_near) / step) + 1);
  for (std::size_t k = 0;; ++k) {
    const double t0 = t_near + double(k) * step;
    if (t0 >= t_far) break;
    const double t1 = std::min(t0 + step, t_far);
    out.push_back({0.5 * (t0 + t1), t1 - t0});
  }
  return out;
}

namespace {

std::optional<Interval> clip_ray(const Ray& ray, const Aabb& bounds) {
  auto hit = ray_aabb_clip(ray, bounds);
  if (!hit) return std::nullopt;
  const double t0 = std::max(hit->t_near, ray.t_near);
  const double t1 = std::min(hit->t_far, ray.t_far);
  if (t0 > t1) return std::nullopt;
  return Interval{t0, t1};
}

void integrate_into(const VoxelGrid& grid, const Ray& ray, double step, std::span<double> out,
                    std::span<double> scratch) {
  std::fill(out.begin(), out.end(), 0.0);
  const auto hit = clip_ray(ray, grid.bounds());
  if (!hit) return;
  for (const auto& smp : midpoint_samples(hit->t_near, hit->t_far, step)) {
    grid.sample(ray.at(smp.t), scratch);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += scratch[c] * smp.delta;
  }
}

}  // namespace

std::vector<double> line_integral(const VoxelGrid& grid, const Ray& ray, double step) {
  if (!(step > 0.0)) throw Error(Errc::InvalidArgument, "step must be positive");
  std::vector<double> out(grid.channels()), scratch(grid.channels());
  integrate_into(grid, ray, step, out, scratch);
  return out;
}

std::vector<double> analytic_sphere_integral(const Vec3& center, double radius,
                                             std::span<const double> mu, const Ray& ray) {
  std::vector<double> out(mu.size(), 0.0);
  const Vec3 oc = ray.origin - center;
  const double b = oc.dot(ray.direction);
  const double disc = b * b - (oc.squaredNorm() - radius * radius);
  if (disc <= 0.0) return out;
  const double root = std::sqrt(disc);
  const double t0 = std::max(-b - root, ray.t_near);
  const double t1 = std::min(-b + root, ray.t_far);
  const double chord = std::max(0.0, t1 - t0);
  for (std::size_t c = 0; c < mu.size(); ++c) out[c] = mu[c] * chord;
  return out;
}

ProjectionImage render_projection(const VoxelGrid& grid, const LpbCamera& cam, double step) {
  const int nc = grid.channels();
  ProjectionImage img(cam.width, cam.height, nc, 1.0);
  img.camera = cam;
  std::vector<double> integral(nc), scratch(nc);
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Ray ray = generate_ray(cam, Vec2(x + 0.5, y + 0.5));
      integrate_into(grid, ray, step, integral, scratch);
      for (int c = 0; c < nc; ++c) img.at(x, y, c) = std::exp(-integral[c]);
    }
  }
  return img;
}

std::optional<Bbox2> project_primitive_box(const Primitive& prim, const LpbCamera& cam,
                                           int surface_density) {
  Bbox2 box;
  box.u_min = box.v_min = std::numeric_limits<double>::infinity();
  box.u_max = box.v_max = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& p : prim.surface_samples(surface_density)) {
    Vec2 px;
    try {
      px = project(cam, p);
    } catch (const Error&) {
      continue;
    }
    any = true;
    box.u_min = std::min(box.u_min, px.x());
    box.u_max = std::max(box.u_max, px.x());
    box.v_min = std::min(box.v_min, px.y());
    box.v_max = std::max(box.v_max, px.y());
  }
  if (!any) return std::nullopt;
  box.cls = prim.material.name;
  return box;
}

Dataset synthesize_dataset(const SpectralScene& scene, std::span<const LpbCamera> cameras,
                           const SynthesisOptions& options,
                           std::vector<ProjectionImage>* transmittance) {
  if (cameras.size() < 2) throw Error(Errc::InvalidArgument, "need at least two cameras");
  const double s = cameras.front().intrinsics.s;
  for (const auto& cam : cameras) {
    if (cam.intrinsics.s != s) throw Error(Errc::InvalidArgument, "cameras must share s");
  }
  const auto basis = SpectralBasis::dual_energy();
  const VoxelGrid grid = voxelize(scene, options.voxel_dims, basis);
  const double step = options.step > 0.0 ? options.step : 0.5 * grid.pitch().minCoeff();

  Dataset ds;
  ds.s = s;
  ds.bounds = scene.bounds;
  if (transmittance) transmittance->clear();
  for (std::size_t v = 0; v < cameras.size(); ++v) {
    ProjectionImage trans = render_projection(grid, cameras[v], step);
    trans.view_id = int(v);
    ProjectionImage rgb(trans.width, trans.height, 3);
    rgb.camera = cameras[v];
    rgb.view_id = int(v);
    for (int y = 0; y < trans.height; ++y) {
      for (int x = 0; x < trans.width; ++x) {
        const double t[2] = {trans.at(x, y, 0), trans.at(x, y, 1)};
        const Vec3 color = reference_color_map(t);
        for (int c = 0; c < 3; ++c) {
          double value = color[c];
          if (options.noise_sigma > 0.0) {
            Rng noise(hash_seed(options.seed, v, std::uint64_t(y) * trans.width + x, c));
            value = std::clamp(value + options.noise_sigma * noise.normal(), 0.0, 1.0);
          }
          rgb.at(x, y, c) = value;
        }
      }
    }
    for (std::size_t k = 0; k < scene.primitives.size(); ++k) {
      auto box = project_primitive_box(scene.primitives[k], cameras[v], options.surface_density);
      if (!box) continue;
      box->view = int(v);
      box->object = int(k);
      rgb.boxes.push_back(*box);
    }
    ds.images.push_back(std::move(rgb));
    if (transmittance) transmittance->push_back(std::move(trans));
  }
  return ds;
}

void quantize_rgb8(ProjectionImage& image) {
  for (double& v : image.pixels) v = std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0;
}

std::vector<LpbCamera> make_fan_rig(const RigConfig& rig) {
  if (rig.views < 1 || rig.width < 1 || rig.height < 1) {
    throw Error(Errc::InvalidArgument, "rig needs positive view count and image size");
  }
  const Aabb& b = rig.bounds;
  // Largest distance of a bounds corner from the conveyor axis.
  double radius = 0.0;
  for (double x : {b.min.x(), b.max.x()}) {
    for (double z : {b.min.z(), b.max.z()}) radius = std::max(radius, std::hypot(x, z));
  }
  if (!(rig.source_distance > radius)) {
    throw Error(Errc::InvalidArgument, "sources must lie outside the scene bounds");
  }
  const double tan_half = radius / std::sqrt(rig.source_distance * rig.source_distance - radius * radius);
  const double scan_extent = b.extent().y() * rig.margin;

  LpbIntrinsics intr;
  intr.cx = 0.5 * rig.width;
  intr.f = 0.5 * rig.width / (rig.margin * tan_half);
  intr.s = rig.height / scan_extent;

  std::vector<LpbCamera> cams;
  for (int k = 0; k < rig.views; ++k) {
    const double th = (rig.start_deg + k * rig.spacing_deg) * std::numbers::pi / 180.0;
    Mat3 r;
    r.row(0) = Vec3(-std::cos(th), 0.0, std::sin(th));
    r.row(1) = Vec3(0.0, 1.0, 0.0);
    r.row(2) = Vec3(-std::sin(th), 0.0, -std::cos(th));
    const double y0 = 0.5 * (b.min.y() + b.max.y()) - 0.5 * scan_extent;
    const Vec3 center(rig.source_distance * std::sin(th), y0, rig.source_distance * std::cos(th));
    LpbCamera cam;
    cam.intrinsics = intr;
    cam.world_to_camera = Rigid3::from_matrix(r, -(r * center));
    cam.width = rig.width;
    cam.height = rig.height;
    cams.push_back(cam);
  }
  return cams;
}

nlohmann::json bbox_to_json(const Bbox2& box) {
  return {{"class", box.cls},     {"object", box.object}, {"u_min", box.u_min},
          {"v_min", box.v_min},   {"u_max", box.u_max},   {"v_max", box.v_max}};
}

Bbox2 bbox_from_json(const nlohmann::json& j, int view) {
  Bbox2 b;
  b.view = view;
  b.cls = j.value("class", std::string());
  b.object = j.value("object", -1);
  b.u_min = j.at("u_min").get<double>();
  b.v_min = j.at("v_min").get<double>();
  b.u_max = j.at("u_max").get<double>();
  b.v_max = j.at("v_max").get<double>();
  if (!(b.u_min < b.u_max) || !(b.v_min < b.v_max)) {
    throw Error(Errc::InvalidArgument, "bounding box needs min < max on both axes");
  }
  return b;
}

namespace {

std::string view_stem(int v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "view_%03d", v);
  return buf;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  std::span<const ProjectionImage> transmittance) {
  std::filesystem::create_directories(dir);
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.images.size(); ++i) {
    const auto& img = dataset.images[i];
    if (img.channels != 3) throw Error(Errc::InvalidArgument, "dataset images must be RGB");
    const std::string stem = view_stem(int(i));
    Rgb8Image png{img.width, img.height, {}};
    png.pixels.reserve(img.pixels.size());
    for (double v : img.pixels) png.pixels.push_back(std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
    write_png(dir / (stem + ".png"), png);

    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : img.boxes) boxes.push_back(bbox_to_json(b));
    write_json(dir / (stem + ".json"),
               {{"view", img.view_id}, {"camera", camera_to_json(img.camera)}, {"boxes", boxes}});
    names.push_back(stem);

    if (i < transmittance.size()) {
      const auto& t = transmittance[i];
      VoxelGrid raw({t.width, t.height, 1}, t.channels, dataset.bounds);
      for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x)
          for (int c = 0; c < t.channels; ++c) raw.at(c, x, y, 0) = float(t.at(x, y, c));
      save_voxel_grid(raw, dir / (stem + "_transmittance"));
    }
  }
  write_json(dir / "manifest.json", {{"bounds", aabb_to_json(dataset.bounds)},
                                     {"s", dataset.s},
                                     {"n_images", dataset.images.size()},
                                     {"images", names}});
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  Dataset ds;
  ds.bounds = aabb_from_json(manifest.at("bounds"));
  ds.s = manifest.at("s").get<double>();
  for (const auto& name : manifest.at("images")) {
    const std::string stem = name.get<std::string>();
    const auto meta = read_json(dir / (stem + ".json"));
    const Rgb8Image png = read_png(dir / (stem + ".png"));
    ProjectionImage img(png.width, png.height, 3);
    for (std::size_t k = 0; k < png.pixels.size(); ++k) img.pixels[k] = png.pixels[k] / 255.0;
    img.camera = camera_from_json(meta.at("camera"));
    img.view_id = meta.value("view", int(ds.images.size()));
    for (const auto& b : meta.at("boxes")) img.boxes.push_back(bbox_from_json(b, img.view_id));
    if (img.camera.width != img.width || img.camera.height != img.height) {
      throw Error(Errc::DimMismatch, stem + ": camera size does not match the image");
    }
    ds.images.push_back(std::move(img));
  }
  if (ds.images.size() != manifest.at("n_images").get<std::size_t>()) {
    throw Error(Errc::Io, "manifest image count mismatch");
  }
  return ds;
}

}  // namespace xnaf
