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

// Box-supervised labelling: visual hull from per-view 2D boxes, region
// growing in the reconstructed field, and yaw-only cuboid fitting.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xnaf/geometry.hpp"
#include "xnaf/phantom.hpp"
#include "xnaf/projector.hpp"

namespace xnaf {

class OccupancyMask {
 public:
  OccupancyMask() = default;
  OccupancyMask(std::array<int, 3> dims, Aabb bounds, bool fill = false);

  const std::array<int, 3>& dims() const { return dims_; }
  const Aabb& bounds() const { return bounds_; }
  std::size_t size() const { return bits_.size(); }
  std::size_t count() const;

  std::size_t index(int x, int y, int z) const {
    return (std::size_t(z) * dims_[1] + y) * dims_[0] + x;
  }
  bool at(int x, int y, int z) const { return bits_[index(x, y, z)] != 0; }
  void set(int x, int y, int z, bool on) { bits_[index(x, y, z)] = on ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }

  /// Same cell layout as VoxelGrid.
  Vec3 pitch() const;
  Vec3 center(int x, int y, int z) const;

  bool operator==(const OccupancyMask& o) const {
    return dims_ == o.dims_ && bits_ == o.bits_;
  }

 private:
  std::array<int, 3> dims_{0, 0, 0};
  Aabb bounds_;
  std::vector<std::uint8_t> bits_;
};

/// A voxel survives iff its centre projects inside the box of every view
/// that has one (box.view indexes `cameras`).  Projection failures exclude.
OccupancyMask visual_hull(std::array<int, 3> dims, const Aabb& bounds,
                          std::span<const LpbCamera> cameras, std::span<const Bbox2> boxes);

/// Per-voxel L2 norm over channels.
std::vector<double> density_norm(const VoxelGrid& field);

/// Half of the 99th percentile (linear interpolation) of the density inside
/// the hull.
double default_tau(std::span<const double> density, const OccupancyMask& hull);

/// 6-connected flood fill from the densest hull voxel over hull voxels with
/// density >= tau.  The seed is always part of the result.
OccupancyMask region_grow(std::span<const double> density, const OccupancyMask& hull, double tau);

struct Rect2 {
  Vec2 center = Vec2::Zero();
  double yaw = 0.0;              // [0, pi/2), direction of the first extent
  Vec2 extents = Vec2::Zero();   // full side lengths
  double area() const { return extents.x() * extents.y(); }
  bool contains(const Vec2& p, double inflate = 0.0) const;
};

/// Monotone-chain hull, collinear points dropped, counter-clockwise.
std::vector<Vec2> convex_hull(std::span<const Vec2> points);

/// Minimum-area enclosing rectangle; one side lies on a hull edge.  Ties go
/// to the smaller yaw.  Collinear input gives a zero-width rectangle along
/// the segment, a single point a zero-size one.
Rect2 min_area_rect(std::span<const Vec2> points);

struct Cuboid {
  std::string cls;
  Vec3 center = Vec3::Zero();
  double yaw = 0.0;  // about world Z, [0, pi/2)
  Vec3 extents = Vec3::Zero();

  bool contains(const Vec3& p, double inflate = 0.0) const;
};

/// Rectangle of the occupied centres in the XY plane plus their Z range,
/// grown by one voxel so the cuboid covers whole cells.
Cuboid cuboid_from_mask(const OccupancyMask& mask);

nlohmann::json cuboid_to_json(const Cuboid& c);
Cuboid cuboid_from_json(const nlohmann::json& j);

/// VoxelGrid raw format, one channel of 0/1.
void save_mask(const OccupancyMask& mask, const std::filesystem::path& base);

}  // namespace xnaf
