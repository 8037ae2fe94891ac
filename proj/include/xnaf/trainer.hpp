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

// Joint optimisation of the attenuation field, the colour network and the
// per-view camera parameters under the squared photometric loss.

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "xnaf/camera_chain.hpp"
#include "xnaf/field.hpp"
#include "xnaf/geometry.hpp"
#include "xnaf/projector.hpp"

namespace xnaf {

/// One view's optimisable camera, stored as slot values relative to a fixed
/// reference pose and rotation pivot (see camera_chain.hpp).  The scan scale
/// lives in ParamSet.
struct ViewParams {
  Mat3 r0 = Mat3::Identity();
  Vec3 c0 = Vec3::Zero();
  Vec3 pivot = Vec3::Zero();
  int width = 0;
  int height = 0;
  std::array<double, kCameraDof> dof{};  // f, cx, k1, k2, rot(3), trans(3)

  static ViewParams from_camera(const LpbCamera& cam, const Vec3& pivot = Vec3::Zero());
  LpbCamera camera(double s) const;
};

template <class S>
struct ParamSet {
  FieldNet<S> field;
  ColorNet<S> color;
  std::vector<ViewParams> views;
  double s = 1.0;

  std::vector<LpbCamera> cameras() const {
    std::vector<LpbCamera> out;
    for (const auto& v : views) out.push_back(v.camera(s));
    return out;
  }

  template <class T>
  ParamSet<T> cast() const {
    return {field.template cast<T>(), color.template cast<T>(), views, s};
  }
};

template <class S>
struct Gradients {
  VecX<S> field;
  VecX<S> color;
  std::vector<std::array<double, kCameraDof>> views;
  double s = 0.0;

  static Gradients zeros_like(const ParamSet<S>& p) {
    Gradients g;
    g.field = VecX<S>::Zero(p.field.mlp.params().size());
    g.color = VecX<S>::Zero(p.color.mlp.params().size());
    g.views.assign(p.views.size(), {});
    return g;
  }
};

struct LearnFlags {
  bool field = true;
  bool color = true;
  bool pose = true;
  bool intrinsics = true;
  bool scale = false;
};

struct PixelSample {
  int view = 0;
  double u = 0.0;  // continuous pixel coordinates
  double v = 0.0;
  Vec3 rgb = Vec3::Zero();
};

struct BatchContext {
  Aabb bounds;
  RenderConfig render;
  std::uint64_t seed = 0;
  std::uint64_t iteration = 0;
};

/// Sum over the batch of squared RGB residuals; rays come from the current
/// camera parameters.
template <class S>
double photometric_loss(const ParamSet<S>& params, std::span<const PixelSample> batch,
                        const BatchContext& ctx);

/// Exact reverse-mode gradient of photometric_loss.  Frozen groups come back
/// as zeros.  Returns the loss.
template <class S>
double backward(const ParamSet<S>& params, std::span<const PixelSample> batch,
                const BatchContext& ctx, const LearnFlags& flags, Gradients<S>& grads);

struct LearningRates {
  double field = 5e-3;
  double color = 5e-3;
  double rotation = 1e-3;     // radians
  double translation = 1e-3;  // scene units
  double focal = 1e-2;        // f and cx, px
  double distortion = 1e-5;   // k1, k2
  double scale = 1e-3;        // s
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class S>
struct AdamState {
  VecX<S> m_field, v_field, m_color, v_color;
  std::vector<std::array<double, kCameraDof>> m_views, v_views;
  double m_s = 0.0, v_s = 0.0;
  long step = 0;

  static AdamState zeros_like(const ParamSet<S>& p) {
    AdamState st;
    st.m_field = st.v_field = VecX<S>::Zero(p.field.mlp.params().size());
    st.m_color = st.v_color = VecX<S>::Zero(p.color.mlp.params().size());
    st.m_views.assign(p.views.size(), {});
    st.v_views.assign(p.views.size(), {});
    return st;
  }
};

/// Bias-corrected adaptive-moment update; frozen groups are left untouched.
template <class S>
void adam_step(AdamState<S>& state, ParamSet<S>& params, const Gradients<S>& grads,
               const LearningRates& lr, const AdamConfig& adam, const LearnFlags& flags);

/// Coarse-to-fine band weights: alpha = clamp((iter - start) / (end - start))
/// * bands, w_l = clamp(alpha - l, 0, 1).
std::vector<double> c2f_weights(int iter, int start, int end, int bands);

struct TrainConfig {
  int iterations = 10000;
  int batch_rays = 256;
  LearningRates lr;
  double lr_final_ratio = 0.1;  // exponential decay to this fraction
  AdamConfig adam;
  int c2f_start = 0;
  int c2f_end = 0;  // start == end == 0 disables the schedule
  bool refine_pose = false;
  bool refine_intrinsics = false;
  bool refine_scale = false;
  double intrinsics_warmup = 0.2;  // fraction of iterations with intrinsics frozen
  double pose_warmup = 0.0;        // fraction of iterations with poses frozen
  bool pivot_at_center = false;    // rotation slots orbit the scene centre, not the camera centre
  int log_every = 100;
  std::uint64_t seed = 0;
  FieldArch field;
  ColorArch color;
  RenderConfig render;
};

nlohmann::json train_config_to_json(const TrainConfig& cfg);
/// Missing keys keep their defaults.
TrainConfig train_config_from_json(const nlohmann::json& j);

struct PoseError {
  double rot_deg = 0.0;
  double trans = 0.0;
};

/// Geodesic rotation angle and camera-centre distance.
PoseError pose_error(const LpbCamera& est, const LpbCamera& gt);

/// Rigid world transform (estimated frame -> reference frame) that best
/// overlays the camera centres of `est` on those of `gt` (Kabsch).
Rigid3 align_cameras(std::span<const LpbCamera> est, std::span<const LpbCamera> gt);
LpbCamera transform_camera(const LpbCamera& cam, const Rigid3& world_change);

struct HistoryRow {
  int iteration = 0;
  double loss = 0.0;  // mean batch loss since the previous row
  double psnr = 0.0;  // from the same window's mean squared error
  std::vector<PoseError> pose;  // per view, when ground truth was given
};

struct TrainResult {
  ParamSet<float> params;
  std::vector<HistoryRow> history;
};

/// Draws batch_rays pixels uniformly over all training images.
std::vector<PixelSample> sample_batch(const Dataset& dataset, int batch_rays, std::uint64_t seed,
                                      std::uint64_t iteration);

/// on_log receives every history row together with the current parameters.
TrainResult train(const Dataset& dataset, std::span<const LpbCamera> init_cameras,
                  const TrainConfig& cfg, std::span<const LpbCamera> gt_cameras = {},
                  const std::function<void(const HistoryRow&, const ParamSet<float>&)>& on_log = {});

std::string history_csv(const std::vector<HistoryRow>& history);

struct GradCheckEntry {
  std::string name;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Central differences against backward() on a tiny double-precision
/// problem: 2x8 field, one-hidden-layer colour net, 4 rays, every camera DoF
/// and s learnable.
GradCheckReport run_gradient_check(std::uint64_t seed = 1, double h = 1e-4, double tol = 1e-4);

}  // namespace xnaf
