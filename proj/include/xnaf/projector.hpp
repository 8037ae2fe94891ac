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

// Analytic forward model: Beer's-law line integrals through voxel grids and
// analytic spheres, transmittance rendering and synthetic RGB datasets.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xnaf/geometry.hpp"
#include "xnaf/phantom.hpp"

namespace xnaf {

struct Bbox2 {
  int view = 0;
  std::string cls;
  int object = -1;
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  bool contains(const Vec2& px) const {
    return px.x() >= u_min && px.x() <= u_max && px.y() >= v_min && px.y() <= v_max;
  }
};

struct ProjectionImage {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<double> pixels;  // row-major, channels interleaved, values in [0, 1]
  LpbCamera camera;
  std::vector<Bbox2> boxes;
  int view_id = 0;

  ProjectionImage() = default;
  ProjectionImage(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c), pixels(std::size_t(w) * h * c, fill) {}

  double& at(int x, int y, int c) { return pixels[(std::size_t(y) * width + x) * channels + c]; }
  double at(int x, int y, int c) const {
    return pixels[(std::size_t(y) * width + x) * channels + c];
  }
};

struct Dataset {
  std::vector<ProjectionImage> images;
  double s = 1.0;
  Aabb bounds;
};

struct RaySample {
  double t;
  double delta;
};

/// Midpoints of consecutive intervals of length `step` on [t_near, t_far];
/// the last interval is truncated.
std::vector<RaySample> midpoint_samples(double t_near, double t_far, double step);

/// Per-channel sum of mu(midpoint) * delta along the part of the ray inside
/// the grid bounds.
std::vector<double> line_integral(const VoxelGrid& grid, const Ray& ray, double step);

/// mu * chord length of the ray through the sphere.
std::vector<double> analytic_sphere_integral(const Vec3& center, double radius,
                                             std::span<const double> mu, const Ray& ray);

/// Transmittance image, exp(-line integral) per channel, incident intensity 1.
ProjectionImage render_projection(const VoxelGrid& grid, const LpbCamera& cam, double step);

/// Pixel-axis-aligned extent of the projected surface samples of `prim`.
std::optional<Bbox2> project_primitive_box(const Primitive& prim, const LpbCamera& cam,
                                           int surface_density = 24);

struct SynthesisOptions {
  double step = 0.0;  // <= 0: half the voxel pitch
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::array<int, 3> voxel_dims{128, 128, 128};
  int surface_density = 24;
};

/// voxelise -> transmittance -> reference colour map -> optional noise.
/// Per-view transmittance images are returned through `transmittance` when
/// requested.
Dataset synthesize_dataset(const SpectralScene& scene, std::span<const LpbCamera> cameras,
                           const SynthesisOptions& options,
                           std::vector<ProjectionImage>* transmittance = nullptr);

/// Rounds every pixel to the nearest 8-bit level.
void quantize_rgb8(ProjectionImage& image);

struct RigConfig {
  int views = 9;
  double spacing_deg = 40.0;
  double start_deg = 0.0;
  double source_distance = 2.5;  // source to conveyor axis, scene units
  int width = 128;
  int height = 128;
  double margin = 1.05;  // field-of-view slack around the scene bounds
  Aabb bounds;
};

/// Sources on a circle about the conveyor (world Y) axis, each looking at
/// the axis; f and s chosen so the detector covers the bounds.
std::vector<LpbCamera> make_fan_rig(const RigConfig& rig);

void save_dataset(const Dataset& dataset, const std::filesystem::path& dir,
                  std::span<const ProjectionImage> transmittance = {});
Dataset load_dataset(const std::filesystem::path& dir);

nlohmann::json bbox_to_json(const Bbox2& box);
Bbox2 bbox_from_json(const nlohmann::json& j, int view);

}  // namespace xnaf
