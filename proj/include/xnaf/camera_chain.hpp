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

// Camera-parameter chain written once for both plain doubles and ceres::Jet,
// so the trainer can get exact pose/intrinsic derivatives of ray origins,
// directions and box entry/exit distances by forward-mode differentiation.
//
// Poses are parameterised locally around a reference pose (R0, c0) and a
// pivot point p, normally the scene centre:
//   world_to_camera rotation  R = exp(d_rot) * R0
//   camera centre             c = p + R^T R0 (c0 - p) + d_trans
// so a rotation orbits the camera about p and leaves p fixed in the image.
// Rotating about the camera centre instead makes small rotations and
// sideways shifts nearly interchangeable, which slows pose recovery.

#pragma once

#include <ceres/jet.h>

#include <cmath>
#include <limits>

#include "xnaf/geometry.hpp"

namespace xnaf {

/// Slot layout of the per-camera differentiable parameter vector.  Slot
/// kScale carries the scan scale shared by all views.
enum CameraSlot : int {
  kSlotF = 0,
  kSlotCx = 1,
  kSlotK1 = 2,
  kSlotK2 = 3,
  kSlotRot = 4,    // 3 slots
  kSlotTrans = 7,  // 3 slots
  kSlotScale = 10,
  kCameraSlots = 11,
};

inline constexpr int kCameraDof = 10;

inline double scalar_value(double x) { return x; }
template <class T, int N>
double scalar_value(const ceres::Jet<T, N>& j) { return j.a; }

/// Rotates `pt` by the angle-axis vector `w` (Rodrigues); first order near
/// zero, where the closed form loses precision.
template <class T>
void angle_axis_rotate(const T w[3], const T pt[3], T out[3]) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  const T theta2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
  const T w_cross_pt[3] = {w[1] * pt[2] - w[2] * pt[1], w[2] * pt[0] - w[0] * pt[2],
                           w[0] * pt[1] - w[1] * pt[0]};
  if (scalar_value(theta2) > std::numeric_limits<double>::epsilon()) {
    const T theta = sqrt(theta2);
    const T c = cos(theta);
    const T sn = sin(theta);
    const T inv = T(1.0) / theta;
    const T axis[3] = {w[0] * inv, w[1] * inv, w[2] * inv};
    const T axis_cross_pt[3] = {w_cross_pt[0] * inv, w_cross_pt[1] * inv, w_cross_pt[2] * inv};
    const T k = (axis[0] * pt[0] + axis[1] * pt[1] + axis[2] * pt[2]) * (T(1.0) - c);
    for (int i = 0; i < 3; ++i) out[i] = pt[i] * c + axis_cross_pt[i] * sn + axis[i] * k;
  } else {
    for (int i = 0; i < 3; ++i) out[i] = pt[i] + w_cross_pt[i];
  }
}

template <class T>
struct ChainRay {
  T origin[3];
  T dir[3];
};

template <class T>
struct ChainClip {
  bool hit = false;
  T t_near;
  T t_far;
};

/// Ray for continuous pixel (u, v).  `p` holds kCameraSlots values.
template <class T>
ChainRay<T> chain_ray(const T* p, const Mat3& r0, const Vec3& c0, double u, double v,
                      double detector_width, const Vec3& pivot = Vec3::Zero()) {
  using std::sqrt;
  using ceres::sqrt;
  const T& f = p[kSlotF];
  const T& cx = p[kSlotCx];
  const T& k1 = p[kSlotK1];
  const T& k2 = p[kSlotK2];
  const T& s = p[kSlotScale];

  // Solve the distortion in doubles, then take one Newton step in T: at the
  // root this reproduces the implicit-function derivative exactly.
  LpbIntrinsics intr;
  intr.f = scalar_value(f);
  intr.cx = scalar_value(cx);
  intr.k1 = scalar_value(k1);
  intr.k2 = scalar_value(k2);
  intr.s = scalar_value(s);
  const double x0 = (undistort(intr, u, detector_width) - intr.cx) / intr.f;
  const double x2 = x0 * x0;
  const T residual = x0 * (T(1.0) + k1 * x2 + k2 * (x2 * x2)) - (T(u) - cx) / f;
  const T slope = T(1.0) + 3.0 * k1 * x2 + 5.0 * k2 * (x2 * x2);
  const T un = T(x0) - residual / slope;

  const T inv_norm = T(1.0) / sqrt(T(1.0) + un * un);
  const T origin_cam[3] = {T(0.0), T(v) / s, T(0.0)};
  const T dir_cam[3] = {un * inv_norm, T(0.0), inv_norm};

  // origin = p + d_trans + R0^T exp(-d_rot) (R0 (c0 - p) + origin_cam)
  const Vec3 arm = r0 * (c0 - pivot);
  const T lever[3] = {T(arm[0]) + origin_cam[0], T(arm[1]) + origin_cam[1], T(arm[2]) + origin_cam[2]};
  const T minus_rot[3] = {-p[kSlotRot], -p[kSlotRot + 1], -p[kSlotRot + 2]};
  T o_rot[3], d_rot[3];
  angle_axis_rotate(minus_rot, lever, o_rot);
  angle_axis_rotate(minus_rot, dir_cam, d_rot);

  ChainRay<T> ray;
  for (int i = 0; i < 3; ++i) {
    // Row i of R0^T is column i of R0.
    ray.origin[i] = T(pivot[i]) + p[kSlotTrans + i] + r0(0, i) * o_rot[0] + r0(1, i) * o_rot[1] +
                    r0(2, i) * o_rot[2];
    ray.dir[i] = r0(0, i) * d_rot[0] + r0(1, i) * d_rot[1] + r0(2, i) * d_rot[2];
  }
  return ray;
}

/// Slab clip in T; the selected faces carry the derivative.
template <class T>
ChainClip<T> chain_clip(const ChainRay<T>& ray, const Aabb& box) {
  ChainClip<T> out;
  T t0(0.0);
  T t1(std::numeric_limits<double>::infinity());
  for (int a = 0; a < 3; ++a) {
    const double d = scalar_value(ray.dir[a]);
    const double o = scalar_value(ray.origin[a]);
    if (d == 0.0) {
      if (o < box.min[a] || o > box.max[a]) return out;
      continue;
    }
    T ta = (T(box.min[a]) - ray.origin[a]) / ray.dir[a];
    T tb = (T(box.max[a]) - ray.origin[a]) / ray.dir[a];
    if (scalar_value(ta) > scalar_value(tb)) std::swap(ta, tb);
    if (scalar_value(ta) > scalar_value(t0)) t0 = ta;
    if (scalar_value(tb) < scalar_value(t1)) t1 = tb;
  }
  if (scalar_value(t0) > scalar_value(t1)) return out;
  out.hit = true;
  out.t_near = t0;
  out.t_far = t1;
  return out;
}

/// Packs a camera into slot values relative to its own pose (zero deltas).
inline void camera_slots(const LpbCamera& cam, double* p) {
  const auto& k = cam.intrinsics;
  p[kSlotF] = k.f;
  p[kSlotCx] = k.cx;
  p[kSlotK1] = k.k1;
  p[kSlotK2] = k.k2;
  for (int i = 0; i < 3; ++i) {
    p[kSlotRot + i] = 0.0;
    p[kSlotTrans + i] = 0.0;
  }
  p[kSlotScale] = k.s;
}

/// Camera described by reference pose (r0, c0), pivot and slot values.
inline LpbCamera camera_from_slots(const double* p, const Mat3& r0, const Vec3& c0, int width,
                                   int height, const Vec3& pivot = Vec3::Zero()) {
  LpbCamera cam;
  cam.intrinsics = {p[kSlotF], p[kSlotCx], p[kSlotScale], p[kSlotK1], p[kSlotK2]};
  const Mat3 r = exp_so3(Vec3(p[kSlotRot], p[kSlotRot + 1], p[kSlotRot + 2])) * r0;
  const Vec3 c = pivot + r.transpose() * (r0 * (c0 - pivot)) +
                 Vec3(p[kSlotTrans], p[kSlotTrans + 1], p[kSlotTrans + 2]);
  cam.world_to_camera = Rigid3::from_matrix(r, -(r * c));
  cam.width = width;
  cam.height = height;
  return cam;
}

}  // namespace xnaf
