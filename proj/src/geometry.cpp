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

#include "xnaf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "xnaf/error.hpp"
#include "xnaf/rng.hpp"

namespace xnaf {

Mat3 exp_so3(const Vec3& axis_angle) {
  const double angle = axis_angle.norm();
  if (angle < 1e-12) {
    Mat3 r = Mat3::Identity();
    r(0, 1) = -axis_angle.z();
    r(0, 2) = axis_angle.y();
    r(1, 0) = axis_angle.z();
    r(1, 2) = -axis_angle.x();
    r(2, 0) = -axis_angle.y();
    r(2, 1) = axis_angle.x();
    return r;
  }
  return Eigen::AngleAxisd(angle, axis_angle / angle).toRotationMatrix();
}

Vec3 log_so3(const Mat3& rotation) {
  // Via the quaternion, which stays well conditioned near pi.
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  const double sin_half = q.vec().norm();
  if (sin_half < 1e-12) return 2.0 * q.vec();
  const double angle = 2.0 * std::atan2(sin_half, q.w());
  return q.vec() / sin_half * angle;
}

Vec3 canonical_axis_angle(const Vec3& axis_angle) { return log_so3(exp_so3(axis_angle)); }

double rotation_angle_between(const Mat3& a, const Mat3& b) {
  return log_so3(a.transpose() * b).norm();
}

Rigid3 Rigid3::from_matrix(const Mat3& rotation, const Vec3& translation) {
  return {log_so3(rotation), translation};
}

Rigid3 Rigid3::inverse() const {
  const Mat3 rt = rotation_matrix().transpose();
  return from_matrix(rt, -rt * translation);
}

Rigid3 compose(const Rigid3& a, const Rigid3& b) {
  const Mat3 ra = a.rotation_matrix();
  return Rigid3::from_matrix(ra * b.rotation_matrix(), ra * b.translation + a.translation);
}

Vec3 LpbCamera::center() const {
  return -(rotation().transpose() * world_to_camera.translation);
}

bool Aabb::contains(const Vec3& p, double tol) const {
  return (p.array() >= min.array() - tol).all() && (p.array() <= max.array() + tol).all();
}

double apply_distortion(const LpbIntrinsics& intr, double u_px) {
  const double un = (u_px - intr.cx) / intr.f;
  const double r2 = un * un;
  return intr.cx + intr.f * un * (1.0 + intr.k1 * r2 + intr.k2 * r2 * r2);
}

namespace {

double distort_normalized(double x, double k1, double k2) {
  const double r2 = x * x;
  return x * (1.0 + k1 * r2 + k2 * r2 * r2);
}

double distort_normalized_slope(double x, double k1, double k2) {
  const double r2 = x * x;
  return 1.0 + 3.0 * k1 * r2 + 5.0 * k2 * r2 * r2;
}

// Smallest x > 0 with zero slope, +inf if the polynomial never folds.
double fold_point(double k1, double k2) {
  // 5 k2 y^2 + 3 k1 y + 1 = 0, y = x^2
  double y_min = std::numeric_limits<double>::infinity();
  if (k2 == 0.0) {
    if (k1 < 0.0) y_min = -1.0 / (3.0 * k1);
  } else {
    const double a = 5.0 * k2, b = 3.0 * k1;
    const double disc = b * b - 4.0 * a;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double y : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (y > 0.0) y_min = std::min(y_min, y);
      }
    }
  }
  return std::sqrt(y_min);
}

}  // namespace

double undistort(const LpbIntrinsics& intr, double u_px, double detector_width) {
  if (intr.k1 == 0.0 && intr.k2 == 0.0) return u_px;
  const double width = detector_width > 0.0 ? detector_width : 2.0 * intr.cx;
  const double reach = std::max(std::abs(intr.cx), std::abs(width - intr.cx)) / intr.f;

  const double fold = fold_point(intr.k1, intr.k2);
  if (std::isfinite(fold) && distort_normalized(fold, intr.k1, intr.k2) <= reach) {
    throw Error(Errc::NonMonotonicDistortion, "distortion folds inside the detector range");
  }

  const double target = (u_px - intr.cx) / intr.f;
  double hi = std::isfinite(fold) ? fold : 1.0;
  if (std::isfinite(fold)) {
    if (std::abs(target) >= distort_normalized(fold, intr.k1, intr.k2)) {
      throw Error(Errc::DomainError, "coordinate outside the invertible distortion range");
    }
  } else {
    while (distort_normalized(hi, intr.k1, intr.k2) < std::abs(target)) hi *= 2.0;
  }
  double lo = -hi;

  // Safeguarded Newton.
  double x = target;
  if (x <= lo || x >= hi) x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double r = distort_normalized(x, intr.k1, intr.k2) - target;
    if (std::abs(r) <= 1e-15 * std::max(1.0, std::abs(target))) break;
    if (r > 0.0) hi = x; else lo = x;
    double next = x - r / distort_normalized_slope(x, intr.k1, intr.k2);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return intr.cx + intr.f * x;
}

Vec2 project(const LpbCamera& cam, const Vec3& p) {
  const Vec3 pc = cam.world_to_camera.apply(p);
  if (!(pc.z() > 0.0)) throw Error(Errc::BehindCamera, "point has camera-frame Z <= 0");
  const auto& k = cam.intrinsics;
  const double u = k.f * pc.x() / pc.z() + k.cx;
  return {apply_distortion(k, u), k.s * pc.y()};
}

Ray generate_ray(const LpbCamera& cam, const Vec2& px) {
  if (px.x() < 0.0 || px.x() > cam.width || px.y() < 0.0 || px.y() > cam.height) {
    throw Error(Errc::OutOfBounds, "pixel outside the image");
  }
  const auto& k = cam.intrinsics;
  const double un = (undistort(k, px.x(), cam.width) - k.cx) / k.f;
  const Vec3 origin_cam(0.0, px.y() / k.s, 0.0);
  const Vec3 dir_cam = Vec3(un, 0.0, 1.0).normalized();
  const Mat3 rt = cam.rotation().transpose();
  Ray ray;
  ray.origin = rt * (origin_cam - cam.world_to_camera.translation);
  ray.direction = (rt * dir_cam).normalized();
  ray.t_near = 0.0;
  ray.t_far = std::numeric_limits<double>::infinity();
  return ray;
}

std::optional<Interval> ray_aabb_clip(const Ray& ray, const Aabb& box) {
  double t0 = 0.0;
  double t1 = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double o = ray.origin[a];
    const double d = ray.direction[a];
    if (d == 0.0) {
      if (o < box.min[a] || o > box.max[a]) return std::nullopt;
      continue;
    }
    double ta = (box.min[a] - o) / d;
    double tb = (box.max[a] - o) / d;
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  if (t0 > t1) return std::nullopt;
  return Interval{t0, t1};
}

LpbCamera perturb_pose(const LpbCamera& cam, double rot_deg, double trans_frac,
                       std::uint64_t seed, double scene_diagonal) {
  if (rot_deg < 0.0 || trans_frac < 0.0) {
    throw Error(Errc::InvalidArgument, "perturbation magnitudes must be non-negative");
  }
  Rng rng(hash_seed(seed, 0x706f7365ULL));
  auto random_unit = [&rng] {
    Vec3 v;
    do {
      v = Vec3(rng.normal(), rng.normal(), rng.normal());
    } while (v.norm() < 1e-9);
    return Vec3(v.normalized());
  };
  const Vec3 axis = random_unit();
  const Vec3 shift_dir = random_unit();

  const Mat3 delta = exp_so3(axis * (rot_deg * std::numbers::pi / 180.0));
  const Mat3 rotation = delta * cam.rotation();
  const Vec3 center = cam.center() + shift_dir * (trans_frac * scene_diagonal);

  LpbCamera out = cam;
  out.world_to_camera = Rigid3::from_matrix(rotation, -(rotation * center));
  return out;
}

nlohmann::json camera_to_json(const LpbCamera& cam) {
  const auto& k = cam.intrinsics;
  const auto& r = cam.world_to_camera.rotation;
  const auto& t = cam.world_to_camera.translation;
  return {{"f", k.f},
          {"cx", k.cx},
          {"s", k.s},
          {"k1", k.k1},
          {"k2", k.k2},
          {"axis_angle", {r.x(), r.y(), r.z()}},
          {"translation", {t.x(), t.y(), t.z()}},
          {"width", cam.width},
          {"height", cam.height}};
}

LpbCamera camera_from_json(const nlohmann::json& j) {
  LpbCamera cam;
  cam.intrinsics.f = j.at("f").get<double>();
  cam.intrinsics.cx = j.at("cx").get<double>();
  cam.intrinsics.s = j.at("s").get<double>();
  cam.intrinsics.k1 = j.value("k1", 0.0);
  cam.intrinsics.k2 = j.value("k2", 0.0);
  const auto& aa = j.at("axis_angle");
  const auto& tr = j.at("translation");
  cam.world_to_camera.rotation = Vec3(aa.at(0), aa.at(1), aa.at(2));
  cam.world_to_camera.translation = Vec3(tr.at(0), tr.at(1), tr.at(2));
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  if (!(cam.intrinsics.f > 0.0) || !(cam.intrinsics.s > 0.0)) {
    throw Error(Errc::InvalidArgument, "camera requires f > 0 and s > 0");
  }
  return cam;
}

nlohmann::json aabb_to_json(const Aabb& box) {
  return {{"min", {box.min.x(), box.min.y(), box.min.z()}},
          {"max", {box.max.x(), box.max.y(), box.max.z()}}};
}

Aabb aabb_from_json(const nlohmann::json& j) {
  const auto& lo = j.at("min");
  const auto& hi = j.at("max");
  return {Vec3(lo.at(0), lo.at(1), lo.at(2)), Vec3(hi.at(0), hi.at(1), hi.at(2))};
}

}  // namespace xnaf
