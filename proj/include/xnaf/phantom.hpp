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

// Synthetic multi-material scenes: two-energy attenuation from Compton and
// photoelectric components, analytic primitives, voxelisation, and the
// reference colour map used to fabricate RGB projections.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "xnaf/geometry.hpp"

namespace xnaf {

struct Material {
  std::string name;
  double alpha_comp = 0.0;
  double alpha_photo = 0.0;
};

/// Total Klein-Nishina cross-section per electron in units of 2 pi r_e^2.
double klein_nishina(double energy_kev);

struct SpectralBasis {
  std::vector<double> energies;  // keV, strictly increasing
  std::vector<double> f_comp;
  std::vector<double> f_photo;

  /// f_photo = (E / E0)^-3, f_comp = KN(E) / KN(E0).
  static SpectralBasis dual_energy(std::vector<double> energies = {60.0, 120.0},
                                   double reference_kev = 60.0);

  std::size_t channels() const { return energies.size(); }
};

double attenuation_at(const Material& m, const SpectralBasis& basis, std::size_t channel);
std::vector<double> attenuation(const Material& m, const SpectralBasis& basis);

/// organic, plastic, light_metal, heavy_metal.
const std::vector<Material>& preset_materials();

enum class Shape { Sphere, Box, Cylinder };

const char* shape_name(Shape shape);

// Shape parameters in `size`:
//   Sphere   (radius, -, -)
//   Box      (half-extents x, y, z)
//   Cylinder (radius, half-length, -), axis along local X
struct Primitive {
  Shape shape = Shape::Sphere;
  Vec3 size = Vec3::Constant(0.5);
  Rigid3 pose;  // local -> world
  Material material;

  bool contains(const Vec3& world_point) const;
  /// Conservative world-space bounds (transformed local box corners).
  Aabb world_bounds() const;
  double bounding_radius() const;
  /// Deterministic points on the surface; `density` controls the count.
  std::vector<Vec3> surface_samples(int density) const;
};

struct SpectralScene {
  std::vector<Primitive> primitives;
  Aabb bounds;
};

class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(std::array<int, 3> dims, int channels, Aabb bounds);

  const std::array<int, 3>& dims() const { return dims_; }
  int channels() const { return channels_; }
  const Aabb& bounds() const { return bounds_; }
  std::size_t voxel_count() const {
    return std::size_t(dims_[0]) * std::size_t(dims_[1]) * std::size_t(dims_[2]);
  }

  Vec3 pitch() const;
  Vec3 center(int x, int y, int z) const;

  // Channel-major, then z, y, x.
  std::size_t index(int c, int x, int y, int z) const {
    return ((std::size_t(c) * dims_[2] + z) * dims_[1] + y) * dims_[0] + x;
  }
  float& at(int c, int x, int y, int z) { return data_[index(c, x, y, z)]; }
  float at(int c, int x, int y, int z) const { return data_[index(c, x, y, z)]; }

  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

  /// Trilinear interpolation between voxel centres, clamped at the edges.
  /// Writes channels() values to `out`.
  void sample(const Vec3& p, std::span<double> out) const;

 private:
  std::array<int, 3> dims_{0, 0, 0};
  int channels_ = 0;
  Aabb bounds_;
  std::vector<float> data_;
};

/// Voxel centre takes the attenuation of the last primitive containing it.
VoxelGrid voxelize(const SpectralScene& scene, std::array<int, 3> dims,
                   const SpectralBasis& basis);

/// Two-channel transmittance (low energy, high energy) to RGB.  White at
/// T = (1, 1); hue follows log T_hi / log T_lo, brightness the mean
/// transmittance.
Vec3 reference_color_map(std::span<const double> transmittance);

SpectralScene make_phantom(std::uint64_t seed, int n_objects);

nlohmann::json material_to_json(const Material& m);
Material material_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SpectralScene& scene);
SpectralScene scene_from_json(const nlohmann::json& j);

/// Writes `<base>.raw` (little-endian float32) and `<base>.json`.
void save_voxel_grid(const VoxelGrid& grid, const std::filesystem::path& base);
VoxelGrid load_voxel_grid(const std::filesystem::path& base);

}  // namespace xnaf
