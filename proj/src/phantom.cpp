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

#include "xnaf/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xnaf/error.hpp"
#include "xnaf/io.hpp"
#include "xnaf/rng.hpp"

namespace xnaf {

namespace {

constexpr double kElectronRestKev = 510.99895;

Vec3 lerp(const Vec3& a, const Vec3& b, double t) { return a + (b - a) * t; }

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Dual-energy ratio -> hue.  Metals (strong photoelectric, low ratio) blue,
// mixed green, organics (Compton dominated, ratio near one) orange.
Vec3 material_hue(double ratio) {
  static const Vec3 kMetal(0.15, 0.35, 0.95);
  static const Vec3 kMixed(0.20, 0.75, 0.25);
  static const Vec3 kOrganic(1.00, 0.55, 0.10);
  if (ratio <= 0.52) return lerp(kMetal, kMixed, smoothstep(0.30, 0.52, ratio));
  return lerp(kMixed, kOrganic, smoothstep(0.52, 0.75, ratio));
}

}  // namespace

double klein_nishina(double energy_kev) {
  const double k = energy_kev / kElectronRestKev;
  const double l = std::log1p(2.0 * k);
  const double a = 1.0 + 2.0 * k;
  return (1.0 + k) / (k * k) * (2.0 * (1.0 + k) / a - l / k) + l / (2.0 * k) -
         (1.0 + 3.0 * k) / (a * a);
}

SpectralBasis SpectralBasis::dual_energy(std::vector<double> energies, double reference_kev) {
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (!(energies[i] > 0.0) || (i > 0 && !(energies[i] > energies[i - 1]))) {
      throw Error(Errc::InvalidArgument, "energies must be positive and strictly increasing");
    }
  }
  SpectralBasis b;
  const double kn_ref = klein_nishina(reference_kev);
  for (double e : energies) {
    b.f_comp.push_back(klein_nishina(e) / kn_ref);
    b.f_photo.push_back(std::pow(e / reference_kev, -3.0));
  }
  b.energies = std::move(energies);
  return b;
}

double attenuation_at(const Material& m, const SpectralBasis& basis, std::size_t channel) {
  if (channel >= basis.channels()) throw Error(Errc::OutOfBounds, "spectral channel index");
  return m.alpha_comp * basis.f_comp[channel] + m.alpha_photo * basis.f_photo[channel];
}

std::vector<double> attenuation(const Material& m, const SpectralBasis& basis) {
  std::vector<double> mu(basis.channels());
  for (std::size_t j = 0; j < mu.size(); ++j) mu[j] = attenuation_at(m, basis, j);
  return mu;
}

const std::vector<Material>& preset_materials() {
  static const std::vector<Material> presets = {
      {"organic", 1.2, 0.2},
      {"plastic", 1.6, 0.6},
      {"light_metal", 1.4, 2.5},
      {"heavy_metal", 2.0, 7.0},
  };
  return presets;
}

const char* shape_name(Shape shape) {
  switch (shape) {
    case Shape::Sphere: return "sphere";
    case Shape::Box: return "box";
    case Shape::Cylinder: return "cylinder";
  }
  return "?";
}

namespace {

Shape shape_from_name(const std::string& name) {
  if (name == "sphere") return Shape::Sphere;
  if (name == "box") return Shape::Box;
  if (name == "cylinder") return Shape::Cylinder;
  throw Error(Errc::InvalidArgument, "unknown shape '" + name + "'");
}

bool contains_local(Shape shape, const Vec3& size, const Vec3& q) {
  switch (shape) {
    case Shape::Sphere:
      return q.squaredNorm() <= size.x() * size.x();
    case Shape::Box:
      return std::abs(q.x()) <= size.x() && std::abs(q.y()) <= size.y() &&
             std::abs(q.z()) <= size.z();
    case Shape::Cylinder:
      return std::abs(q.x()) <= size.y() && q.y() * q.y() + q.z() * q.z() <= size.x() * size.x();
  }
  return false;
}

Vec3 local_half_extents(Shape shape, const Vec3& size) {
  switch (shape) {
    case Shape::Sphere: return Vec3::Constant(size.x());
    case Shape::Box: return size;
    case Shape::Cylinder: return {size.y(), size.x(), size.x()};
  }
  return Vec3::Zero();
}

}  // namespace

bool Primitive::contains(const Vec3& world_point) const {
  const Mat3 r = pose.rotation_matrix();
  return contains_local(shape, size, r.transpose() * (world_point - pose.translation));
}

Aabb Primitive::world_bounds() const {
  const Vec3 h = local_half_extents(shape, size);
  if (shape == Shape::Sphere) return {pose.translation - h, pose.translation + h};
  const Mat3 r = pose.rotation_matrix();
  const Vec3 reach = r.cwiseAbs() * h;
  return {pose.translation - reach, pose.translation + reach};
}

double Primitive::bounding_radius() const { return local_half_extents(shape, size).norm(); }

std::vector<Vec3> Primitive::surface_samples(int density) const {
  const int m = std::max(density, 2);
  std::vector<Vec3> local;
  switch (shape) {
    case Shape::Sphere: {
      const int n = 6 * m * m;
      const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        local.emplace_back(size.x() * rho * std::cos(phi), size.x() * rho * std::sin(phi),
                           size.x() * z);
      }
      break;
    }
    case Shape::Box: {
      for (int axis = 0; axis < 3; ++axis) {
        const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (double sign : {-1.0, 1.0}) {
          for (int i = 0; i < m; ++i) {
            for (int j = 0; j < m; ++j) {
              Vec3 q;
              q[axis] = sign * size[axis];
              q[a1] = size[a1] * (-1.0 + 2.0 * i / (m - 1));
              q[a2] = size[a2] * (-1.0 + 2.0 * j / (m - 1));
              local.push_back(q);
            }
          }
        }
      }
      break;
    }
    case Shape::Cylinder: {
      const double r = size.x(), h = size.y();
      const int around = 4 * m;
      for (int i = 0; i < m; ++i) {
        const double x = h * (-1.0 + 2.0 * i / (m - 1));
        for (int k = 0; k < around; ++k) {
          const double phi = 2.0 * std::numbers::pi * k / around;
          local.emplace_back(x, r * std::cos(phi), r * std::sin(phi));
        }
      }
      for (double sign : {-1.0, 1.0}) {
        for (int i = 1; i < m; ++i) {
          const double rho = r * i / (m - 1);
          for (int k = 0; k < around; ++k) {
            const double phi = 2.0 * std::numbers::pi * k / around;
            local.emplace_back(sign * h, rho * std::cos(phi), rho * std::sin(phi));
          }
        }
        local.emplace_back(sign * h, 0.0, 0.0);
      }
      break;
    }
  }
  const Mat3 rot = pose.rotation_matrix();
  for (auto& q : local) q = rot * q + pose.translation;
  return local;
}

VoxelGrid::VoxelGrid(std::array<int, 3> dims, int channels, Aabb bounds)
    : dims_(dims), channels_(channels), bounds_(bounds) {
  if (dims[0] < 1 || dims[1] < 1 || dims[2] < 1 || channels < 1) {
    throw Error(Errc::InvalidArgument, "voxel grid dims and channels must be positive");
  }
  data_.assign(voxel_count() * std::size_t(channels), 0.0f);
}

Vec3 VoxelGrid::pitch() const {
  return bounds_.extent().cwiseQuotient(Vec3(dims_[0], dims_[1], dims_[2]));
}

Vec3 VoxelGrid::center(int x, int y, int z) const {
  return bounds_.min + pitch().cwiseProduct(Vec3(x + 0.5, y + 0.5, z + 0.5));
}

void VoxelGrid::sample(const Vec3& p, std::span<double> out) const {
  const Vec3 g = (p - bounds_.min).cwiseQuotient(pitch()) - Vec3::Constant(0.5);
  int i0[3];
  double fr[3];
  for (int a = 0; a < 3; ++a) {
    const double ga = std::clamp(g[a], 0.0, double(dims_[a] - 1));
    i0[a] = std::min(int(ga), std::max(dims_[a] - 2, 0));
    fr[a] = dims_[a] > 1 ? ga - i0[a] : 0.0;
  }
  const int i1[3] = {std::min(i0[0] + 1, dims_[0] - 1), std::min(i0[1] + 1, dims_[1] - 1),
                     std::min(i0[2] + 1, dims_[2] - 1)};
  for (int c = 0; c < channels_; ++c) {
    auto v = [&](int x, int y, int z) { return double(at(c, x, y, z)); };
    const double c00 = v(i0[0], i0[1], i0[2]) * (1 - fr[0]) + v(i1[0], i0[1], i0[2]) * fr[0];
    const double c10 = v(i0[0], i1[1], i0[2]) * (1 - fr[0]) + v(i1[0], i1[1], i0[2]) * fr[0];
    const double c01 = v(i0[0], i0[1], i1[2]) * (1 - fr[0]) + v(i1[0], i0[1], i1[2]) * fr[0];
    const double c11 = v(i0[0], i1[1], i1[2]) * (1 - fr[0]) + v(i1[0], i1[1], i1[2]) * fr[0];
    const double c0 = c00 * (1 - fr[1]) + c10 * fr[1];
    const double c1 = c01 * (1 - fr[1]) + c11 * fr[1];
    out[c] = c0 * (1 - fr[2]) + c1 * fr[2];
  }
}

VoxelGrid voxelize(const SpectralScene& scene, std::array<int, 3> dims,
                   const SpectralBasis& basis) {
  if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2) {
    throw Error(Errc::InvalidArgument, "voxelize needs at least 2 voxels per axis");
  }
  const int nc = int(basis.channels());
  VoxelGrid grid(dims, nc, scene.bounds);

  struct Prepared {
    Mat3 to_local;
    Vec3 origin;
    Aabb bounds;
    std::vector<double> mu;
  };
  std::vector<Prepared> prims;
  for (const auto& p : scene.primitives) {
    prims.push_back({p.pose.rotation_matrix().transpose(), p.pose.translation, p.world_bounds(),
                     attenuation(p.material, basis)});
  }

  for (int z = 0; z < dims[2]; ++z) {
    for (int y = 0; y < dims[1]; ++y) {
      for (int x = 0; x < dims[0]; ++x) {
        const Vec3 c = grid.center(x, y, z);
        for (std::size_t k = prims.size(); k-- > 0;) {
          const auto& pp = prims[k];
          if (!pp.bounds.contains(c)) continue;
          const auto& prim = scene.primitives[k];
          if (!contains_local(prim.shape, prim.size, pp.to_local * (c - pp.origin))) continue;
          for (int ch = 0; ch < nc; ++ch) grid.at(ch, x, y, z) = float(pp.mu[ch]);
          break;
        }
      }
    }
  }
  return grid;
}

Vec3 reference_color_map(std::span<const double> transmittance) {
  if (transmittance.size() != 2) {
    throw Error(Errc::InvalidArgument, "reference colour map takes two channels");
  }
  for (double t : transmittance) {
    if (!(t >= 0.0 && t <= 1.0)) throw Error(Errc::DomainError, "transmittance outside [0, 1]");
  }
  constexpr double kFloor = 1e-6;
  constexpr double kEps = 1e-3;
  const double t_lo = std::max(transmittance[0], kFloor);
  const double t_hi = std::max(transmittance[1], kFloor);
  const double a_lo = -std::log(t_lo);
  const double a_hi = -std::log(t_hi);
  const double ratio = (a_hi + kEps) / (a_lo + kEps);
  const Vec3 hue = material_hue(ratio);

  const double a_mean = 0.5 * (a_lo + a_hi);
  const double saturation = 1.0 - std::exp(-1.5 * a_mean);
  const double value = 0.08 + 0.92 * std::sqrt(0.5 * (t_lo + t_hi));
  const Vec3 rgb = value * (Vec3::Constant(1.0 - saturation) + saturation * hue);
  return rgb.cwiseMax(0.0).cwiseMin(1.0);
}

SpectralScene make_phantom(std::uint64_t seed, int n_objects) {
  if (n_objects < 1) throw Error(Errc::InvalidArgument, "n_objects must be >= 1");
  constexpr double kInner = 0.85;
  Rng rng(hash_seed(seed, 0x7068616eULL));
  const auto& materials = preset_materials();
  const std::size_t material_offset = rng.below(materials.size());

  SpectralScene scene;
  scene.bounds = Aabb{};
  for (int i = 0; i < n_objects; ++i) {
    Primitive prim;
    switch (rng.below(3)) {
      case 0:
        prim.shape = Shape::Sphere;
        prim.size = Vec3(rng.uniform(0.18, 0.35), 0.0, 0.0);
        break;
      case 1:
        prim.shape = Shape::Box;
        prim.size = Vec3(rng.uniform(0.12, 0.35), rng.uniform(0.12, 0.35), rng.uniform(0.12, 0.3));
        break;
      default:
        prim.shape = Shape::Cylinder;
        prim.size = Vec3(rng.uniform(0.1, 0.22), rng.uniform(0.2, 0.4), 0.0);
        break;
    }
    prim.material = materials[(material_offset + i) % materials.size()];
    prim.pose.rotation = Vec3(0.0, 0.0, rng.uniform(0.0, std::numbers::pi));

    // Rejection sampling on bounding spheres; falls back to the last draw if
    // the scene is too crowded.
    const double radius = std::min(prim.bounding_radius(), kInner - 0.05);
    const double reach = kInner - radius;
    for (int attempt = 0; attempt < 200; ++attempt) {
      prim.pose.translation =
          Vec3(rng.uniform(-reach, reach), rng.uniform(-reach, reach), rng.uniform(-reach, reach));
      bool clear = true;
      for (const auto& other : scene.primitives) {
        const double gap = (other.pose.translation - prim.pose.translation).norm();
        if (gap < other.bounding_radius() + prim.bounding_radius() + 0.05) {
          clear = false;
          break;
        }
      }
      if (clear) break;
    }
    scene.primitives.push_back(prim);
  }
  return scene;
}

nlohmann::json material_to_json(const Material& m) {
  return {{"name", m.name}, {"alpha_comp", m.alpha_comp}, {"alpha_photo", m.alpha_photo}};
}

Material material_from_json(const nlohmann::json& j) {
  Material m{j.at("name").get<std::string>(), j.at("alpha_comp").get<double>(),
             j.at("alpha_photo").get<double>()};
  if (m.alpha_comp < 0.0 || m.alpha_photo < 0.0) {
    throw Error(Errc::InvalidArgument, "material coefficients must be non-negative");
  }
  return m;
}

nlohmann::json scene_to_json(const SpectralScene& scene) {
  nlohmann::json prims = nlohmann::json::array();
  nlohmann::json mats = nlohmann::json::array();
  for (const auto& p : scene.primitives) {
    const auto& r = p.pose.rotation;
    const auto& t = p.pose.translation;
    prims.push_back({{"shape", shape_name(p.shape)},
                     {"size", {p.size.x(), p.size.y(), p.size.z()}},
                     {"pose", {{"axis_angle", {r.x(), r.y(), r.z()}},
                               {"translation", {t.x(), t.y(), t.z()}}}},
                     {"material", p.material.name}});
    const bool known = std::any_of(mats.begin(), mats.end(), [&](const nlohmann::json& m) {
      return m.at("name") == p.material.name;
    });
    if (!known) mats.push_back(material_to_json(p.material));
  }
  return {{"bounds", aabb_to_json(scene.bounds)}, {"materials", mats}, {"primitives", prims}};
}

SpectralScene scene_from_json(const nlohmann::json& j) {
  SpectralScene scene;
  scene.bounds = aabb_from_json(j.at("bounds"));
  std::vector<Material> mats;
  for (const auto& m : j.at("materials")) mats.push_back(material_from_json(m));
  for (const auto& pj : j.at("primitives")) {
    Primitive p;
    p.shape = shape_from_name(pj.at("shape").get<std::string>());
    const auto& sz = pj.at("size");
    p.size = Vec3(sz.at(0), sz.at(1), sz.at(2));
    const auto& aa = pj.at("pose").at("axis_angle");
    const auto& tr = pj.at("pose").at("translation");
    p.pose.rotation = Vec3(aa.at(0), aa.at(1), aa.at(2));
    p.pose.translation = Vec3(tr.at(0), tr.at(1), tr.at(2));
    const auto name = pj.at("material").get<std::string>();
    auto it = std::find_if(mats.begin(), mats.end(), [&](const Material& m) { return m.name == name; });
    if (it == mats.end()) throw Error(Errc::InvalidArgument, "unknown material '" + name + "'");
    p.material = *it;
    scene.primitives.push_back(p);
  }
  return scene;
}

void save_voxel_grid(const VoxelGrid& grid, const std::filesystem::path& base) {
  std::vector<std::uint8_t> bytes;
  append_f32_le(bytes, grid.data());
  write_bytes(std::filesystem::path(base.string() + ".raw"), bytes);
  const auto& d = grid.dims();
  write_json(std::filesystem::path(base.string() + ".json"),
             {{"dims", {d[0], d[1], d[2]}},
              {"channels", grid.channels()},
              {"bounds", aabb_to_json(grid.bounds())}});
}

VoxelGrid load_voxel_grid(const std::filesystem::path& base) {
  const auto meta = read_json(std::filesystem::path(base.string() + ".json"));
  const auto& d = meta.at("dims");
  VoxelGrid grid({d.at(0).get<int>(), d.at(1).get<int>(), d.at(2).get<int>()},
                 meta.at("channels").get<int>(), aabb_from_json(meta.at("bounds")));
  auto values = decode_f32_le(read_bytes(std::filesystem::path(base.string() + ".raw")));
  if (values.size() != grid.data().size()) {
    throw Error(Errc::DimMismatch, "voxel blob size does not match its sidecar");
  }
  grid.data() = std::move(values);
  return grid;
}

}  // namespace xnaf
