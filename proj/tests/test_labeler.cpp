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

#include <numbers>

#include "test_util.hpp"
#include "xnaf/error.hpp"
#include "xnaf/labeler.hpp"

using namespace xnaf;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<LpbCamera> rig_cameras(int views) {
  RigConfig rig;
  rig.views = views;
  rig.width = rig.height = 32;
  return make_fan_rig(rig);
}

Bbox2 box(int view, double u0, double v0, double u1, double v1) {
  Bbox2 b;
  b.view = view;
  b.u_min = u0;
  b.v_min = v0;
  b.u_max = u1;
  b.v_max = v1;
  return b;
}

bool subset(const OccupancyMask& a, const OccupancyMask& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] && !b[i]) return false;
  return true;
}

std::vector<Vec2> rotated(std::span<const Vec2> pts, double ang) {
  const Eigen::Rotation2Dd r(ang);
  std::vector<Vec2> out;
  for (const auto& p : pts) out.push_back(r * p);
  return out;
}

}  // namespace

TEST_CASE("occupancy mask layout matches the voxel grid") {
  OccupancyMask m({4, 3, 2}, Aabb{});
  CHECK(m.size() == 24);
  CHECK(m.count() == 0);
  CHECK(m.index(1, 2, 1) == 21);
  m.set(1, 2, 1, true);
  CHECK(m.at(1, 2, 1));
  CHECK(m[21]);
  CHECK(m.count() == 1);
  const VoxelGrid g({4, 3, 2}, 1, Aabb{});
  CHECK((m.center(1, 2, 1) - g.center(1, 2, 1)).norm() == 0.0);
  CHECK((m.pitch() - g.pitch()).norm() == 0.0);
  CHECK(OccupancyMask({2, 2, 2}, Aabb{}, true).count() == 8);
}

TEST_CASE("visual hull: unbounded boxes keep everything, tight boxes exclude") {
  const auto cams = rig_cameras(3);
  const std::array<int, 3> dims{12, 12, 12};
  std::vector<Bbox2> wide;
  for (int v = 0; v < 3; ++v) wide.push_back(box(v, -1e9, -1e9, 1e9, 1e9));
  CHECK(visual_hull(dims, Aabb{}, cams, wide).count() == 12u * 12 * 12);
  CHECK(visual_hull(dims, Aabb{}, cams, {}).count() == 12u * 12 * 12);

  std::vector<Bbox2> tight{box(0, 14, 14, 18, 18)};
  const OccupancyMask m = visual_hull(dims, Aabb{}, cams, tight);
  CHECK(m.count() > 0);
  CHECK(m.count() < 12u * 12 * 12 / 4);
  for (int z = 0; z < 12; ++z)
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 12; ++x)
        if (m.at(x, y, z)) CHECK(tight[0].contains(project(cams[0], m.center(x, y, z))));

  std::vector<Bbox2> dup{box(1, 0, 0, 5, 5), box(1, 0, 0, 6, 6)};
  CHECK_THROWS_AS(visual_hull(dims, Aabb{}, cams, dup), Error);
  std::vector<Bbox2> unknown{box(5, 0, 0, 5, 5)};
  CHECK_THROWS_AS(visual_hull(dims, Aabb{}, cams, unknown), Error);
}

TEST_CASE("visual hull equals a naive per-voxel oracle and the intersection of single views") {
  const auto cams = rig_cameras(4);
  const std::array<int, 3> dims{10, 14, 9};
  Rng rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Bbox2> boxes;
    for (int v = 0; v < 4; ++v) {
      const double u0 = rng.uniform(2, 14), v0 = rng.uniform(2, 14);
      boxes.push_back(box(v, u0, v0, u0 + rng.uniform(4, 16), v0 + rng.uniform(4, 16)));
    }
    const OccupancyMask hull = visual_hull(dims, Aabb{}, cams, boxes);
    OccupancyMask naive(dims, Aabb{});
    for (int z = 0; z < dims[2]; ++z)
      for (int y = 0; y < dims[1]; ++y)
        for (int x = 0; x < dims[0]; ++x) {
          bool in = true;
          for (const auto& b : boxes) {
            try {
              in = in && b.contains(project(cams[std::size_t(b.view)], naive.center(x, y, z)));
            } catch (const Error&) {
              in = false;
            }
          }
          naive.set(x, y, z, in);
        }
    CHECK(hull == naive);

    OccupancyMask inter(dims, Aabb{}, true);
    for (const auto& b : boxes) {
      const OccupancyMask single = visual_hull(dims, Aabb{}, cams, std::span<const Bbox2>(&b, 1));
      CHECK(subset(hull, single));
      for (std::size_t i = 0; i < inter.size(); ++i)
        if (!single[i]) {
          const int x = int(i % std::size_t(dims[0]));
          const int y = int(i / std::size_t(dims[0]) % std::size_t(dims[1]));
          const int z = int(i / std::size_t(dims[0] * dims[1]));
          inter.set(x, y, z, false);
        }
    }
    CHECK(hull == inter);

    // Shrinking any box can only remove voxels.
    auto smaller = boxes;
    smaller[std::size_t(trial % 4)].u_max -= 2.0;
    CHECK(subset(visual_hull(dims, Aabb{}, cams, smaller), hull));
  }
}

TEST_CASE("density norm and default threshold") {
  VoxelGrid g({2, 1, 1}, 2, Aabb{});
  g.at(0, 0, 0, 0) = 3.0f;
  g.at(1, 0, 0, 0) = 4.0f;
  g.at(0, 1, 0, 0) = 1.0f;
  const auto d = density_norm(g);
  CHECK(d[0] == Approx(5.0));
  CHECK(d[1] == Approx(1.0));

  OccupancyMask hull({10, 10, 1}, Aabb{}, true);
  std::vector<double> dens(100);
  for (int i = 0; i < 100; ++i) dens[std::size_t(i)] = i;
  CHECK(default_tau(dens, hull) == Approx(0.5 * 98.01));
  std::fill(dens.begin(), dens.end(), 1.0);
  CHECK(default_tau(dens, hull) == Approx(0.5));
  CHECK_THROWS_AS(default_tau(dens, OccupancyMask({10, 10, 1}, Aabb{})), Error);
}

TEST_CASE("region growing") {
  const std::array<int, 3> dims{10, 4, 4};
  OccupancyMask hull(dims, Aabb{}, true);
  std::vector<double> dens(hull.size(), 0.0);
  // Two blobs separated by a low-density wall at x = 5.
  for (int z = 1; z < 3; ++z)
    for (int y = 1; y < 3; ++y) {
      for (int x = 1; x < 5; ++x) dens[hull.index(x, y, z)] = 1.0;
      for (int x = 6; x < 9; ++x) dens[hull.index(x, y, z)] = 0.8;
    }
  dens[hull.index(2, 1, 1)] = 2.0;
  const OccupancyMask grown = region_grow(dens, hull, 0.5);
  CHECK(grown.count() == 16);
  CHECK(grown.at(2, 1, 1));
  CHECK_FALSE(grown.at(7, 1, 1));

  // Diagonal neighbours do not connect.
  std::vector<double> diag(hull.size(), 0.0);
  diag[hull.index(3, 1, 1)] = 1.0;
  diag[hull.index(4, 2, 1)] = 1.0;
  CHECK(region_grow(diag, hull, 0.5).count() == 1);

  // The seed survives an unreachable threshold; tau = 0 fills the hull.
  CHECK(region_grow(dens, hull, 10.0).count() == 1);
  CHECK(region_grow(dens, hull, 0.0).count() == hull.count());

  // Growth never leaves the hull.
  OccupancyMask half(dims, Aabb{});
  for (int z = 0; z < 4; ++z)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 4; ++x) half.set(x, y, z, true);
  const OccupancyMask inside = region_grow(dens, half, 0.5);
  CHECK(subset(inside, half));
  CHECK(inside.count() == 12);

  CHECK_THROWS_AS(region_grow(dens, hull, -1.0), Error);
  CHECK_THROWS_AS(region_grow(dens, OccupancyMask(dims, Aabb{}), 0.5), Error);
}

TEST_CASE("convex hull drops interior and collinear points") {
  const std::vector<Vec2> pts{{0, 0}, {1, 0}, {2, 0}, {2, 1}, {2, 2}, {1, 1}, {0, 2}, {0.5, 1.5}, {0, 1}};
  const auto h = convex_hull(pts);
  REQUIRE(h.size() == 4);
  double area2 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const Vec2& a = h[i];
    const Vec2& b = h[(i + 1) % h.size()];
    area2 += a.x() * b.y() - a.y() * b.x();
  }
  CHECK(area2 == Approx(8.0));  // counter-clockwise
}

TEST_CASE("minimum-area rectangle examples") {
  const std::vector<Vec2> square{{0, 0}, {2, 0}, {2, 1}, {0, 1}, {1, 0.5}};
  const Rect2 r = min_area_rect(square);
  CHECK(r.yaw == Approx(0.0).scale(1.0));
  CHECK(r.extents.x() == Approx(2.0));
  CHECK(r.extents.y() == Approx(1.0));
  CHECK(r.center.isApprox(Vec2(1, 0.5)));

  const auto tilted = rotated(square, kPi / 6);
  const Rect2 t = min_area_rect(tilted);
  CHECK(t.yaw == Approx(kPi / 6));
  CHECK(t.extents.x() == Approx(2.0));
  CHECK(t.area() == Approx(2.0));

  // Rotations past 90 degrees fold back with the extents swapped.
  const Rect2 f = min_area_rect(rotated(square, kPi / 2 + 0.2));
  CHECK(f.yaw == Approx(0.2));
  CHECK(f.extents.x() == Approx(1.0));
  CHECK(f.extents.y() == Approx(2.0));

  const std::vector<Vec2> line{{0, 0}, {1, 1}, {3, 3}};
  const Rect2 l = min_area_rect(line);
  CHECK(l.area() == Approx(0.0).scale(1.0));
  CHECK(std::max(l.extents.x(), l.extents.y()) == Approx(3 * std::sqrt(2.0)));

  const std::vector<Vec2> one{{0.3, -0.2}};
  const Rect2 p = min_area_rect(one);
  CHECK(p.area() == 0.0);
  CHECK(p.center.isApprox(one[0]));
}

TEST_CASE("minimum-area rectangle against a dense angle search") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 50; ++i) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-0.4, 0.4));
    pts = rotated(pts, rng.uniform(0, kPi));
    const Rect2 r = min_area_rect(pts);
    CHECK(r.yaw >= 0.0);
    CHECK(r.yaw < kPi / 2);
    for (const auto& q : pts) CHECK(r.contains(q, 1e-9));
    double best = INFINITY;
    for (int k = 0; k < 20000; ++k) {
      const double a = k * (kPi / 2) / 20000;
      const Vec2 e0(std::cos(a), std::sin(a)), e1(-std::sin(a), std::cos(a));
      double lo0 = INFINITY, hi0 = -INFINITY, lo1 = INFINITY, hi1 = -INFINITY;
      for (const auto& q : pts) {
        lo0 = std::min(lo0, q.dot(e0));
        hi0 = std::max(hi0, q.dot(e0));
        lo1 = std::min(lo1, q.dot(e1));
        hi1 = std::max(hi1, q.dot(e1));
      }
      best = std::min(best, (hi0 - lo0) * (hi1 - lo1));
    }
    CHECK(r.area() <= best + 1e-12);
    CHECK(r.area() >= best * (1 - 1e-4));
  }
}

TEST_CASE("minimum-area rectangle is rotation equivariant") {
  Rng rng(29);
  std::vector<Vec2> pts;
  for (int i = 0; i < 30; ++i) pts.emplace_back(rng.uniform(-1, 1), rng.uniform(-0.5, 0.5));
  const Rect2 base = min_area_rect(pts);
  for (double ang : {0.3, 1.1, 2.0, -0.7}) {
    const Rect2 r = min_area_rect(rotated(pts, ang));
    CHECK(r.area() == Approx(base.area()).epsilon(1e-9));
    CHECK(r.center.isApprox(Eigen::Rotation2Dd(ang) * base.center, 1e-9));
    double d = std::fmod(r.yaw - base.yaw - ang, kPi / 2);
    if (d < 0) d += kPi / 2;
    CHECK(std::min(d, kPi / 2 - d) < 1e-9);
  }
}

TEST_CASE("cuboid from mask covers whole cells") {
  OccupancyMask empty({8, 8, 8}, Aabb{});
  CHECK_THROWS_AS(cuboid_from_mask(empty), Error);

  OccupancyMask m({8, 8, 8}, Aabb{});
  for (int z = 2; z < 4; ++z)
    for (int y = 1; y < 6; ++y)
      for (int x = 3; x < 6; ++x) m.set(x, y, z, true);
  const Cuboid c = cuboid_from_mask(m);
  const Vec3 pitch = m.pitch();
  CHECK(c.yaw == Approx(0.0).scale(1.0));
  CHECK(c.extents.x() == Approx(3 * pitch.x()));
  CHECK(c.extents.y() == Approx(5 * pitch.y()));
  CHECK(c.extents.z() == Approx(2 * pitch.z()));
  CHECK(c.center.isApprox(0.5 * (m.center(3, 1, 2) + m.center(5, 5, 3))));
  for (int z = 0; z < 8; ++z)
    for (int y = 0; y < 8; ++y)
      for (int x = 0; x < 8; ++x) CHECK(c.contains(m.center(x, y, z), 1e-9) == m.at(x, y, z));

  OccupancyMask single({8, 8, 8}, Aabb{});
  single.set(0, 7, 4, true);
  const Cuboid s = cuboid_from_mask(single);
  CHECK(s.extents.isApprox(pitch));
  CHECK(s.center.isApprox(single.center(0, 7, 4)));
}

TEST_CASE("cuboid JSON round trip") {
  Cuboid c;
  c.cls = "organic";
  c.center = Vec3(0.1, -0.2, 0.3);
  c.yaw = 0.4;
  c.extents = Vec3(0.5, 0.6, 0.7);
  const nlohmann::json j = cuboid_to_json(c);
  CHECK(j.at("class") == "organic");
  const Cuboid b = cuboid_from_json(j);
  CHECK(b.cls == c.cls);
  CHECK(b.center == c.center);
  CHECK(b.yaw == c.yaw);
  CHECK(b.extents == c.extents);
  CHECK_THROWS(cuboid_from_json(nlohmann::json{{"class", "x"}}));
}

TEST_CASE("mask files load back as a one-channel grid") {
  const auto dir = test::scratch_dir("mask");
  OccupancyMask m({4, 5, 6}, Aabb{});
  m.set(1, 2, 3, true);
  save_mask(m, dir / "m");
  const VoxelGrid g = load_voxel_grid(dir / "m");
  CHECK(g.channels() == 1);
  CHECK(g.dims() == m.dims());
  CHECK(g.at(0, 1, 2, 3) == 1.0f);
  CHECK(g.at(0, 0, 0, 0) == 0.0f);
}
