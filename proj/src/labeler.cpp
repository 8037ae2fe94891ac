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

#include "xnaf/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "xnaf/error.hpp"

namespace xnaf {

OccupancyMask::OccupancyMask(std::array<int, 3> dims, Aabb bounds, bool fill)
    : dims_(dims), bounds_(bounds) {
  for (int d : dims)
    if (d < 1) throw Error(Errc::InvalidArgument, "mask dimensions must be positive");
  bits_.assign(std::size_t(dims[0]) * dims[1] * dims[2], fill ? 1 : 0);
}

std::size_t OccupancyMask::count() const {
  return std::size_t(std::count(bits_.begin(), bits_.end(), std::uint8_t(1)));
}

Vec3 OccupancyMask::pitch() const {
  return bounds_.extent().cwiseQuotient(Vec3(dims_[0], dims_[1], dims_[2]));
}

Vec3 OccupancyMask::center(int x, int y, int z) const {
  return bounds_.min + pitch().cwiseProduct(Vec3(x + 0.5, y + 0.5, z + 0.5));
}

OccupancyMask visual_hull(std::array<int, 3> dims, const Aabb& bounds,
                          std::span<const LpbCamera> cameras, std::span<const Bbox2> boxes) {
  std::vector<int> seen(cameras.size(), 0);
  for (const auto& b : boxes) {
    if (b.view < 0 || std::size_t(b.view) >= cameras.size()) {
      throw Error(Errc::InvalidArgument, "box refers to a missing view");
    }
    if (seen[std::size_t(b.view)]++) throw Error(Errc::InvalidArgument, "two boxes in one view");
  }
  OccupancyMask hull(dims, bounds, true);
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        const Vec3 p = hull.center(x, y, z);
        for (const auto& b : boxes) {
          bool inside = false;
          try {
            inside = b.contains(project(cameras[std::size_t(b.view)], p));
          } catch (const Error&) {
            inside = false;
          }
          if (!inside) {
            hull.set(x, y, z, false);
            break;
          }
        }
      }
  return hull;
}

std::vector<double> density_norm(const VoxelGrid& field) {
  const std::size_t n = field.voxel_count();
  std::vector<double> out(n, 0.0);
  for (int c = 0; c < field.channels(); ++c)
    for (std::size_t i = 0; i < n; ++i) {
      const double v = field.data()[std::size_t(c) * n + i];
      out[i] += v * v;
    }
  for (double& v : out) v = std::sqrt(v);
  return out;
}

double default_tau(std::span<const double> density, const OccupancyMask& hull) {
  if (density.size() != hull.size()) throw Error(Errc::DimMismatch, "density and hull sizes differ");
  std::vector<double> inside;
  for (std::size_t i = 0; i < hull.size(); ++i)
    if (hull[i]) inside.push_back(density[i]);
  if (inside.empty()) throw Error(Errc::EmptyHull, "visual hull is empty");
  std::sort(inside.begin(), inside.end());
  const double pos = 0.99 * double(inside.size() - 1);
  const std::size_t lo = std::size_t(pos);
  const std::size_t hi = std::min(lo + 1, inside.size() - 1);
  const double q = inside[lo] + (pos - double(lo)) * (inside[hi] - inside[lo]);
  return 0.5 * q;
}

OccupancyMask region_grow(std::span<const double> density, const OccupancyMask& hull, double tau) {
  if (density.size() != hull.size()) throw Error(Errc::DimMismatch, "density and hull sizes differ");
  if (!(tau >= 0.0)) throw Error(Errc::InvalidArgument, "tau must be non-negative");
  std::size_t seed = hull.size();
  for (std::size_t i = 0; i < hull.size(); ++i)
    if (hull[i] && (seed == hull.size() || density[i] > density[seed])) seed = i;
  if (seed == hull.size()) throw Error(Errc::EmptyHull, "visual hull is empty");

  const auto [nx, ny, nz] = hull.dims();
  OccupancyMask out(hull.dims(), hull.bounds());
  std::vector<std::size_t> queue{seed};
  const auto coords = [&](std::size_t i) {
    const int x = int(i % std::size_t(nx));
    const int y = int((i / std::size_t(nx)) % std::size_t(ny));
    const int z = int(i / (std::size_t(nx) * ny));
    return std::array<int, 3>{x, y, z};
  };
  {
    const auto [x, y, z] = coords(seed);
    out.set(x, y, z, true);
  }
  static constexpr int kSteps[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0},
                                       {0, 1, 0},  {0, 0, -1}, {0, 0, 1}};
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const auto [x, y, z] = coords(queue[head]);
    for (const auto& d : kSteps) {
      const int a = x + d[0], b = y + d[1], c = z + d[2];
      if (a < 0 || b < 0 || c < 0 || a >= nx || b >= ny || c >= nz) continue;
      const std::size_t j = hull.index(a, b, c);
      if (out[j] || !hull[j] || density[j] < tau) continue;
      out.set(a, b, c, true);
      queue.push_back(j);
    }
  }
  return out;
}

bool Rect2::contains(const Vec2& p, double inflate) const {
  const Vec2 d = p - center;
  const double c = std::cos(yaw), s = std::sin(yaw);
  const double a = c * d.x() + s * d.y();
  const double b = -s * d.x() + c * d.y();
  return std::abs(a) <= 0.5 * extents.x() + inflate && std::abs(b) <= 0.5 * extents.y() + inflate;
}

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Reduces a side direction to yaw in [0, pi/2), swapping extents when the
// other side becomes the reference.
void canonicalize(double angle, Vec2& extents, double& yaw) {
  constexpr double half_pi = std::numbers::pi / 2.0;
  double a = std::fmod(angle, std::numbers::pi);
  if (a < 0.0) a += std::numbers::pi;
  if (a >= half_pi - 1e-12) {
    a -= half_pi;
    extents = Vec2(extents.y(), extents.x());
  }
  yaw = std::max(a, 0.0);
}

}  // namespace

std::vector<Vec2> convex_hull(std::span<const Vec2> points) {
  std::vector<Vec2> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

Rect2 min_area_rect(std::span<const Vec2> points) {
  if (points.empty()) throw Error(Errc::InvalidArgument, "no points");
  const auto hull = convex_hull(points);
  Rect2 best;
  if (hull.size() == 1) {
    best.center = hull[0];
    return best;
  }
  if (hull.size() == 2) {
    const Vec2 d = hull[1] - hull[0];
    best.center = 0.5 * (hull[0] + hull[1]);
    best.extents = Vec2(d.norm(), 0.0);
    canonicalize(std::atan2(d.y(), d.x()), best.extents, best.yaw);
    return best;
  }
  bool have = false;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 e = (hull[(i + 1) % hull.size()] - hull[i]).normalized();
    const Vec2 n(-e.y(), e.x());
    double emin = INFINITY, emax = -INFINITY, nmin = INFINITY, nmax = -INFINITY;
    for (const auto& p : hull) {
      const double a = e.dot(p), b = n.dot(p);
      emin = std::min(emin, a);
      emax = std::max(emax, a);
      nmin = std::min(nmin, b);
      nmax = std::max(nmax, b);
    }
    Rect2 r;
    r.center = e * (0.5 * (emin + emax)) + n * (0.5 * (nmin + nmax));
    r.extents = Vec2(emax - emin, nmax - nmin);
    canonicalize(std::atan2(e.y(), e.x()), r.extents, r.yaw);
    const double tol = 1e-12 * std::max(1.0, best.area());
    if (!have || r.area() < best.area() - tol ||
        (std::abs(r.area() - best.area()) <= tol && r.yaw < best.yaw)) {
      best = r;
      have = true;
    }
  }
  return best;
}

bool Cuboid::contains(const Vec3& p, double inflate) const {
  const Rect2 r{Vec2(center.x(), center.y()), yaw, Vec2(extents.x(), extents.y())};
  return r.contains(Vec2(p.x(), p.y()), inflate) &&
         std::abs(p.z() - center.z()) <= 0.5 * extents.z() + inflate;
}

Cuboid cuboid_from_mask(const OccupancyMask& mask) {
  std::vector<Vec2> xy;
  double zmin = INFINITY, zmax = -INFINITY;
  const auto [nx, ny, nz] = mask.dims();
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) {
        if (!mask.at(x, y, z)) continue;
        const Vec3 c = mask.center(x, y, z);
        xy.emplace_back(c.x(), c.y());
        zmin = std::min(zmin, c.z());
        zmax = std::max(zmax, c.z());
      }
  if (xy.empty()) throw Error(Errc::EmptyMask, "mask has no occupied voxels");
  const Rect2 r = min_area_rect(xy);
  const Vec3 pitch = mask.pitch();
  const double c = std::cos(r.yaw), s = std::sin(r.yaw);
  Cuboid out;
  out.center = Vec3(r.center.x(), r.center.y(), 0.5 * (zmin + zmax));
  out.yaw = r.yaw;
  out.extents = Vec3(r.extents.x() + std::abs(c) * pitch.x() + std::abs(s) * pitch.y(),
                     r.extents.y() + std::abs(s) * pitch.x() + std::abs(c) * pitch.y(),
                     zmax - zmin + pitch.z());
  return out;
}

nlohmann::json cuboid_to_json(const Cuboid& c) {
  return {{"class", c.cls},
          {"center", {c.center.x(), c.center.y(), c.center.z()}},
          {"yaw", c.yaw},
          {"extents", {c.extents.x(), c.extents.y(), c.extents.z()}}};
}

Cuboid cuboid_from_json(const nlohmann::json& j) {
  Cuboid c;
  c.cls = j.at("class").get<std::string>();
  const auto ctr = j.at("center").get<std::array<double, 3>>();
  const auto ext = j.at("extents").get<std::array<double, 3>>();
  c.center = Vec3(ctr[0], ctr[1], ctr[2]);
  c.yaw = j.at("yaw").get<double>();
  c.extents = Vec3(ext[0], ext[1], ext[2]);
  return c;
}

void save_mask(const OccupancyMask& mask, const std::filesystem::path& base) {
  VoxelGrid grid(mask.dims(), 1, mask.bounds());
  for (std::size_t i = 0; i < mask.size(); ++i) grid.data()[i] = mask[i] ? 1.0f : 0.0f;
  save_voxel_grid(grid, base);
}

}  // namespace xnaf
