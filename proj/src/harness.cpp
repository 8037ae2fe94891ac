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

#include "xnaf/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "xnaf/image_io.hpp"
#include "xnaf/metrics.hpp"

namespace xnaf {

LpbCamera resize_camera(const LpbCamera& cam, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "image size must be positive");
  LpbCamera out = cam;
  const double sx = double(width) / cam.width;
  const double sy = double(height) / cam.height;
  out.intrinsics.f *= sx;
  out.intrinsics.cx *= sx;
  out.intrinsics.s *= sy;
  out.width = width;
  out.height = height;
  return out;
}

void save_image_png(const ProjectionImage& image, const std::filesystem::path& path) {
  if (image.channels != 3) throw Error(Errc::InvalidArgument, "PNG export needs three channels");
  Rgb8Image png{image.width, image.height, {}};
  png.pixels.reserve(image.pixels.size());
  for (double v : image.pixels) {
    png.pixels.push_back(std::uint8_t(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  }
  write_png(path, png);
}

ProjectionImage load_image_png(const std::filesystem::path& path) {
  const Rgb8Image png = read_png(path);
  ProjectionImage img(png.width, png.height, 3);
  for (std::size_t k = 0; k < png.pixels.size(); ++k) img.pixels[k] = png.pixels[k] / 255.0;
  return img;
}

ProjectionImage render_view(const FieldNet<float>& field, const ColorNet<float>& color,
                            const RenderConfig& cfg, const LpbCamera& cam, const Aabb& bounds) {
  RenderConfig fixed = cfg;
  fixed.stratified = false;
  ProjectionImage img(cam.width, cam.height, 3);
  img.camera = cam;
  std::vector<std::optional<Ray>> rays(std::size_t(cam.width));
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      try {
        rays[std::size_t(x)] = clip_to_bounds(generate_ray(cam, Vec2(x + 0.5, y + 0.5)), bounds);
      } catch (const Error&) {
        rays[std::size_t(x)].reset();
      }
    }
    const Eigen::Matrix3Xd rgb = render_rays(field, color, fixed, std::span<const std::optional<Ray>>(rays));
    for (int x = 0; x < cam.width; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = rgb(c, x);
  }
  return img;
}

std::vector<ProjectionImage> render_novel_views(const Checkpoint& ckpt,
                                                std::span<const LpbCamera> cameras, int width,
                                                int height) {
  std::vector<ProjectionImage> out;
  for (std::size_t k = 0; k < cameras.size(); ++k) {
    const LpbCamera cam =
        width > 0 && height > 0 ? resize_camera(cameras[k], width, height) : cameras[k];
    out.push_back(render_view(ckpt.params.field, ckpt.params.color, ckpt.render, cam, ckpt.bounds));
    out.back().view_id = int(k);
  }
  return out;
}

VoxelGrid export_voxels(const Checkpoint& ckpt, std::array<int, 3> dims) {
  for (int d : dims)
    if (d < 2) throw Error(Errc::InvalidArgument, "voxel export needs at least 2 cells per axis");
  const auto& field = ckpt.params.field;
  const int nc = field.n_spectral();
  VoxelGrid grid(dims, nc, ckpt.bounds);
  MatX<float> pos(3, dims[0]);
  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) {
        const Vec3 p = grid.center(x, y, z);
        pos.col(x) << float(p.x()), float(p.y()), float(p.z());
      }
      const MatX<float> mu = field.forward(pos);
      for (int x = 0; x < dims[0]; ++x)
        for (int c = 0; c < nc; ++c) grid.at(c, x, y, z) = mu(c, x);
    }
  }
  return grid;
}

MetricsReport evaluate_images(std::span<const ProjectionImage> rendered,
                              std::span<const ProjectionImage> reference) {
  if (rendered.size() != reference.size()) {
    throw Error(Errc::DimMismatch, "rendered and reference sets differ in size");
  }
  if (rendered.empty()) throw Error(Errc::InvalidArgument, "no images to evaluate");
  MetricsReport report;
  bool infinite = false;
  for (std::size_t k = 0; k < rendered.size(); ++k) {
    ProjectionImage a = rendered[k], b = reference[k];
    quantize_rgb8(a);
    quantize_rgb8(b);
    ViewMetrics m{reference[k].view_id, psnr(a, b), ssim(a, b)};
    infinite = infinite || std::isinf(m.psnr);
    report.mean_psnr += m.psnr;
    report.mean_ssim += m.ssim;
    report.per_view.push_back(m);
  }
  const double n = double(rendered.size());
  report.mean_psnr = infinite ? std::numeric_limits<double>::infinity() : report.mean_psnr / n;
  report.mean_ssim /= n;
  return report;
}

PoseError mean_aligned_pose_error(std::span<const LpbCamera> est, std::span<const LpbCamera> gt) {
  if (est.size() != gt.size() || est.empty()) {
    throw Error(Errc::DimMismatch, "camera lists differ in length");
  }
  const Rigid3 align = align_cameras(est, gt);
  PoseError mean;
  for (std::size_t k = 0; k < est.size(); ++k) {
    const PoseError e = pose_error(transform_camera(est[k], align), gt[k]);
    mean.rot_deg += e.rot_deg / double(est.size());
    mean.trans += e.trans / double(est.size());
  }
  return mean;
}

namespace {

// JSON has no infinity; the sentinel is the string "inf".
nlohmann::json db_value(double v) {
  if (std::isinf(v)) return "inf";
  return v;
}

std::string db_text(double v) {
  if (std::isinf(v)) return "inf";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

nlohmann::json metrics_to_json(const MetricsReport& report) {
  nlohmann::json per_view = nlohmann::json::array();
  for (const auto& m : report.per_view) {
    per_view.push_back({{"view", m.view}, {"psnr", db_value(m.psnr)}, {"ssim", m.ssim}});
  }
  nlohmann::json j = {{"per_view", per_view},
                      {"mean_psnr", db_value(report.mean_psnr)},
                      {"mean_ssim", report.mean_ssim}};
  if (report.pose) {
    j["pose"] = {{"mean_rot_deg", report.pose->rot_deg}, {"mean_trans", report.pose->trans}};
  } else {
    j["pose"] = nullptr;
  }
  return j;
}

std::string metrics_csv(const MetricsReport& report) {
  std::ostringstream os;
  os << "view,psnr,ssim\n";
  for (const auto& m : report.per_view) {
    os << m.view << ',' << db_text(m.psnr) << ',' << db_text(m.ssim) << '\n';
  }
  os << "mean," << db_text(report.mean_psnr) << ',' << db_text(report.mean_ssim) << '\n';
  if (report.pose) {
    os << "mean_rot_deg," << db_text(report.pose->rot_deg) << ",\n";
    os << "mean_trans," << db_text(report.pose->trans) << ",\n";
  }
  return os.str();
}

}  // namespace xnaf
