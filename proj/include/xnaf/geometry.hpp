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

// Linear-pushbroom camera geometry: projection, 1D detector distortion, ray
// generation and the rigid-transform algebra used by the rest of the library.
//
// Camera frame convention: the X-ray source sits at the camera origin at scan
// line v = 0, the detector runs along camera X, the conveyor along camera Y,
// and camera Z points from the source into the scene.
//
//   u = f * X / Z + cx   (perspective, then radially distorted along u)
//   v = s * Y            (orthographic)

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstdint>
#include <limits>
#include <optional>

#include <json.hpp>

namespace xnaf {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

Mat3 exp_so3(const Vec3& axis_angle);
/// Axis-angle of a rotation matrix, angle in [0, pi].
Vec3 log_so3(const Mat3& rotation);
/// Re-expresses an axis-angle vector with angle in [0, pi].
Vec3 canonical_axis_angle(const Vec3& axis_angle);
/// Geodesic distance between two rotations, radians.
double rotation_angle_between(const Mat3& a, const Mat3& b);

struct Rigid3 {
  Vec3 rotation = Vec3::Zero();     // axis-angle, radians
  Vec3 translation = Vec3::Zero();

  static Rigid3 identity() { return {}; }
  static Rigid3 from_matrix(const Mat3& rotation, const Vec3& translation);

  Mat3 rotation_matrix() const { return exp_so3(rotation); }
  Vec3 apply(const Vec3& p) const { return rotation_matrix() * p + translation; }
  Rigid3 inverse() const;
};

/// (a * b)(p) = a(b(p)).
Rigid3 compose(const Rigid3& a, const Rigid3& b);

struct LpbIntrinsics {
  double f = 1.0;   // detector px per unit tan-angle
  double cx = 0.0;  // principal offset, px
  double s = 1.0;   // scan scale, px per world unit along the conveyor
  double k1 = 0.0;
  double k2 = 0.0;
};

struct LpbCamera {
  LpbIntrinsics intrinsics;
  Rigid3 world_to_camera;
  int width = 0;
  int height = 0;

  /// World position of the source at scan line v = 0.
  Vec3 center() const;
  Mat3 rotation() const { return world_to_camera.rotation_matrix(); }
};

struct Ray {
  Vec3 origin = Vec3::Zero();
  Vec3 direction = Vec3::UnitZ();
  double t_near = 0.0;
  double t_far = std::numeric_limits<double>::infinity();  // unclipped

  Vec3 at(double t) const { return origin + t * direction; }
};

struct Aabb {
  Vec3 min = Vec3::Constant(-1.0);
  Vec3 max = Vec3::Constant(1.0);

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
  double diagonal() const { return extent().norm(); }
  bool contains(const Vec3& p, double tol = 0.0) const;
};

struct Interval {
  double t_near;
  double t_far;
};

Vec2 project(const LpbCamera& cam, const Vec3& p);

double apply_distortion(const LpbIntrinsics& intr, double u_px);

/// Inverse of apply_distortion on the detector [0, detector_width].  A
/// non-positive width means "symmetric about cx", i.e. [0, 2 cx].
double undistort(const LpbIntrinsics& intr, double u_px, double detector_width = 0.0);

/// Ray through continuous pixel coordinates (u, v); pixel (i, j) has its
/// centre at (i + 0.5, j + 0.5).  t_near / t_far are left at 0 / +inf until
/// clipped.
Ray generate_ray(const LpbCamera& cam, const Vec2& px);

/// Slab intersection clipped to t >= 0.  nullopt is a miss.
std::optional<Interval> ray_aabb_clip(const Ray& ray, const Aabb& box);

/// Rotates the camera about its own centre by rot_deg around a random axis and
/// moves the centre by a random vector of norm trans_frac * scene_diagonal.
LpbCamera perturb_pose(const LpbCamera& cam, double rot_deg, double trans_frac,
                       std::uint64_t seed, double scene_diagonal = 2.0 * 1.7320508075688772);

nlohmann::json camera_to_json(const LpbCamera& cam);
LpbCamera camera_from_json(const nlohmann::json& j);
nlohmann::json aabb_to_json(const Aabb& box);
Aabb aabb_from_json(const nlohmann::json& j);

}  // namespace xnaf
