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

#include "xnaf/trainer.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "xnaf/error.hpp"
#include "xnaf/rng.hpp"

namespace xnaf {

ViewParams ViewParams::from_camera(const LpbCamera& cam, const Vec3& pivot) {
  ViewParams v;
  v.r0 = cam.rotation();
  v.c0 = cam.center();
  v.pivot = pivot;
  v.width = cam.width;
  v.height = cam.height;
  double slots[kCameraSlots];
  camera_slots(cam, slots);
  std::copy_n(slots, kCameraDof, v.dof.begin());
  return v;
}

LpbCamera ViewParams::camera(double s) const {
  double slots[kCameraSlots];
  std::copy(dof.begin(), dof.end(), slots);
  slots[kSlotScale] = s;
  return camera_from_slots(slots, r0, c0, width, height, pivot);
}

namespace {

using Jet = ceres::Jet<double, kCameraSlots>;

struct RayState {
  bool hit = false;
  Jet origin[3];
  Jet dir[3];
  Jet t_near;
  Jet t_far;
  double delta = 0.0;
};

// Forward pass shared by the loss and its gradient.  With `grads` null only
// the loss is computed.
template <class S>
double run_batch(const ParamSet<S>& p, std::span<const PixelSample> batch,
                 const BatchContext& ctx, const LearnFlags* flags, Gradients<S>* grads) {
  if (batch.empty()) throw Error(Errc::InvalidArgument, "empty batch");
  const int ns = ctx.render.samples;
  if (ns < 2) throw Error(Errc::InvalidArgument, "need at least two samples per ray");
  const Eigen::Index nr = Eigen::Index(batch.size());
  const Eigen::Index total = nr * ns;
  const int nc = p.field.n_spectral();

  std::vector<RayState> rays(static_cast<std::size_t>(nr));
  std::vector<double> fractions(std::size_t(total), 0.0);
  MatX<S> pos = MatX<S>::Zero(3, total);

  for (Eigen::Index r = 0; r < nr; ++r) {
    const auto& px = batch[std::size_t(r)];
    if (px.view < 0 || std::size_t(px.view) >= p.views.size()) {
      throw Error(Errc::OutOfBounds, "pixel sample references an unknown view");
    }
    const ViewParams& view = p.views[std::size_t(px.view)];
    Jet slots[kCameraSlots];
    for (int k = 0; k < kCameraDof; ++k) slots[k] = Jet(view.dof[std::size_t(k)], k);
    slots[kSlotScale] = Jet(p.s, kSlotScale);

    const ChainRay<Jet> ray = chain_ray(slots, view.r0, view.c0, px.u, px.v, view.width, view.pivot);
    const ChainClip<Jet> clip = chain_clip(ray, ctx.bounds);
    RayState& st = rays[std::size_t(r)];
    std::copy_n(ray.origin, 3, st.origin);
    std::copy_n(ray.dir, 3, st.dir);
    if (!clip.hit || !(clip.t_far.a > clip.t_near.a)) continue;
    st.hit = true;
    st.t_near = clip.t_near;
    st.t_far = clip.t_far;
    const double span = clip.t_far.a - clip.t_near.a;
    st.delta = span / ns;
    for (int i = 0; i < ns; ++i) {
      const double a =
          (i + stratum_jitter(ctx.render, ctx.seed, ctx.iteration, std::uint64_t(r), i)) / ns;
      fractions[std::size_t(r * ns + i)] = a;
      const double t = clip.t_near.a + a * span;
      for (int k = 0; k < 3; ++k) pos(k, r * ns + i) = S(ray.origin[k].a + t * ray.dir[k].a);
    }
  }

  const MatX<S> features = encode_batch<S>(p.field.encoder, pos);
  typename Mlp<S>::Cache field_cache;
  const MatX<S> mu = p.field.mlp.forward(features, grads ? &field_cache : nullptr);

  MatX<S> mu_sum(nc, nr);
  for (Eigen::Index r = 0; r < nr; ++r) mu_sum.col(r) = mu.middleCols(r * ns, ns).rowwise().sum();

  MatX<S> trans(nc, nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const double delta = rays[std::size_t(r)].delta;
    for (int j = 0; j < nc; ++j) {
      trans(j, r) = S(ctx.render.incident_at(j)) * std::exp(-mu_sum(j, r) * S(delta));
    }
  }

  typename Mlp<S>::Cache color_cache;
  const MatX<S> rgb = p.color.mlp.forward(trans, grads ? &color_cache : nullptr);

  MatX<S> residual(3, nr);
  double loss = 0.0;
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (int c = 0; c < 3; ++c) {
      residual(c, r) = rgb(c, r) - S(batch[std::size_t(r)].rgb[c]);
      loss += double(residual(c, r)) * double(residual(c, r));
    }
  }
  if (!grads) return loss;

  // Reverse pass.
  const MatX<S> d_trans = p.color.mlp.backward(color_cache, S(2) * residual, grads->color);
  const MatX<S> d_atten = -(trans.array() * d_trans.array()).matrix();  // dL/dA

  MatX<S> d_mu(nc, total);
  std::vector<double> d_delta(std::size_t(nr), 0.0);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const S delta = S(rays[std::size_t(r)].delta);
    d_mu.middleCols(r * ns, ns) = (d_atten.col(r) * delta).replicate(1, ns);
    d_delta[std::size_t(r)] = double(d_atten.col(r).dot(mu_sum.col(r)));
  }

  const MatX<S> d_features = p.field.mlp.backward(field_cache, d_mu, grads->field);
  const MatX<S> d_pos = encode_backward<S>(p.field.encoder, pos, d_features);

  // Camera chain: x_i = o + t_i d, t_i = t_n + a_i (t_f - t_n),
  // delta = (t_f - t_n) / ns.
  for (Eigen::Index r = 0; r < nr; ++r) {
    const RayState& st = rays[std::size_t(r)];
    if (!st.hit) continue;
    Vec3 g_o = Vec3::Zero(), g_d = Vec3::Zero();
    double g_tn = 0.0, g_tf = 0.0;
    const double tn = st.t_near.a, tf = st.t_far.a;
    const Vec3 dir(st.dir[0].a, st.dir[1].a, st.dir[2].a);
    for (int i = 0; i < ns; ++i) {
      const Eigen::Index col = r * ns + i;
      const Vec3 gx = d_pos.col(col).template cast<double>();
      const double a = fractions[std::size_t(col)];
      const double t = tn + a * (tf - tn);
      g_o += gx;
      g_d += t * gx;
      const double along = gx.dot(dir);
      g_tn += (1.0 - a) * along;
      g_tf += a * along;
    }
    g_tn -= d_delta[std::size_t(r)] / ns;
    g_tf += d_delta[std::size_t(r)] / ns;

    Eigen::Matrix<double, kCameraSlots, 1> g = g_tn * st.t_near.v + g_tf * st.t_far.v;
    for (int k = 0; k < 3; ++k) g += g_o[k] * st.origin[k].v + g_d[k] * st.dir[k].v;

    auto& gv = grads->views[std::size_t(batch[std::size_t(r)].view)];
    for (int k = 0; k < kCameraDof; ++k) gv[std::size_t(k)] += g[k];
    grads->s += g[kSlotScale];
  }

  if (!flags->field) grads->field.setZero();
  if (!flags->color) grads->color.setZero();
  for (auto& gv : grads->views) {
    if (!flags->intrinsics) std::fill_n(gv.begin(), 4, 0.0);
    if (!flags->pose) std::fill(gv.begin() + kSlotRot, gv.end(), 0.0);
  }
  if (!flags->scale) grads->s = 0.0;

  bool finite = grads->field.allFinite() && grads->color.allFinite() && std::isfinite(grads->s);
  for (const auto& gv : grads->views)
    for (double x : gv) finite = finite && std::isfinite(x);
  if (!finite) throw Error(Errc::NonFiniteGradient, "gradient has NaN or Inf components");
  return loss;
}

template <class S>
void adam_update(VecX<S>& param, VecX<S>& m, VecX<S>& v, const VecX<S>& g, double lr,
                 const AdamConfig& adam, double c1, double c2) {
  m = S(adam.beta1) * m + S(1.0 - adam.beta1) * g;
  v = S(adam.beta2) * v + S(1.0 - adam.beta2) * g.cwiseProduct(g);
  param.array() -= S(lr) * (m.array() / S(c1)) / ((v.array() / S(c2)).sqrt() + S(adam.eps));
}

void adam_scalar(double& param, double& m, double& v, double g, double lr, const AdamConfig& adam,
                 double c1, double c2) {
  m = adam.beta1 * m + (1.0 - adam.beta1) * g;
  v = adam.beta2 * v + (1.0 - adam.beta2) * g * g;
  param -= lr * (m / c1) / (std::sqrt(v / c2) + adam.eps);
}

}  // namespace

template <class S>
double photometric_loss(const ParamSet<S>& params, std::span<const PixelSample> batch,
                        const BatchContext& ctx) {
  return run_batch<S>(params, batch, ctx, nullptr, nullptr);
}

template <class S>
double backward(const ParamSet<S>& params, std::span<const PixelSample> batch,
                const BatchContext& ctx, const LearnFlags& flags, Gradients<S>& grads) {
  grads = Gradients<S>::zeros_like(params);
  const double loss = run_batch<S>(params, batch, ctx, &flags, &grads);
  if (!std::isfinite(loss)) throw Error(Errc::NonFiniteGradient, "loss is not finite");
  return loss;
}

template <class S>
void adam_step(AdamState<S>& st, ParamSet<S>& p, const Gradients<S>& g, const LearningRates& lr,
               const AdamConfig& adam, const LearnFlags& flags) {
  ++st.step;
  const double c1 = 1.0 - std::pow(adam.beta1, double(st.step));
  const double c2 = 1.0 - std::pow(adam.beta2, double(st.step));
  if (flags.field) adam_update(p.field.mlp.params(), st.m_field, st.v_field, g.field, lr.field, adam, c1, c2);
  if (flags.color) adam_update(p.color.mlp.params(), st.m_color, st.v_color, g.color, lr.color, adam, c1, c2);
  for (std::size_t v = 0; v < p.views.size(); ++v) {
    auto& dof = p.views[v].dof;
    for (int k = 0; k < kCameraDof; ++k) {
      double rate = 0.0;
      if (k < kSlotRot) {
        if (!flags.intrinsics) continue;
        rate = k < kSlotK1 ? lr.focal : lr.distortion;
      } else {
        if (!flags.pose) continue;
        rate = k < kSlotTrans ? lr.rotation : lr.translation;
      }
      adam_scalar(dof[std::size_t(k)], st.m_views[v][std::size_t(k)], st.v_views[v][std::size_t(k)],
                  g.views[v][std::size_t(k)], rate, adam, c1, c2);
    }
  }
  if (flags.scale) adam_scalar(p.s, st.m_s, st.v_s, g.s, lr.scale, adam, c1, c2);
}

template double photometric_loss<float>(const ParamSet<float>&, std::span<const PixelSample>,
                                        const BatchContext&);
template double photometric_loss<double>(const ParamSet<double>&, std::span<const PixelSample>,
                                         const BatchContext&);
template double backward<float>(const ParamSet<float>&, std::span<const PixelSample>,
                                const BatchContext&, const LearnFlags&, Gradients<float>&);
template double backward<double>(const ParamSet<double>&, std::span<const PixelSample>,
                                 const BatchContext&, const LearnFlags&, Gradients<double>&);
template void adam_step<float>(AdamState<float>&, ParamSet<float>&, const Gradients<float>&,
                               const LearningRates&, const AdamConfig&, const LearnFlags&);
template void adam_step<double>(AdamState<double>&, ParamSet<double>&, const Gradients<double>&,
                                const LearningRates&, const AdamConfig&, const LearnFlags&);

std::vector<double> c2f_weights(int iter, int start, int end, int bands) {
  double alpha;
  if (end <= start) {
    alpha = iter >= end ? bands : 0.0;
  } else {
    alpha = std::clamp(double(iter - start) / double(end - start), 0.0, 1.0) * bands;
  }
  std::vector<double> w(std::size_t(std::max(bands, 0)));
  for (int l = 0; l < bands; ++l) w[std::size_t(l)] = std::clamp(alpha - l, 0.0, 1.0);
  return w;
}

PoseError pose_error(const LpbCamera& est, const LpbCamera& gt) {
  return {rotation_angle_between(est.rotation(), gt.rotation()) * 180.0 / std::numbers::pi,
          (est.center() - gt.center()).norm()};
}

Rigid3 align_cameras(std::span<const LpbCamera> est, std::span<const LpbCamera> gt) {
  if (est.size() != gt.size() || est.empty()) {
    throw Error(Errc::DimMismatch, "alignment needs matching, non-empty camera lists");
  }
  const std::size_t n = est.size();
  Vec3 me = Vec3::Zero(), mg = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    me += est[i].center();
    mg += gt[i].center();
  }
  me /= double(n);
  mg /= double(n);
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) h += (est[i].center() - me) * (gt[i].center() - mg).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 q = svd.matrixV() * d * svd.matrixU().transpose();
  return Rigid3::from_matrix(q, mg - q * me);
}

LpbCamera transform_camera(const LpbCamera& cam, const Rigid3& world_change) {
  const Mat3 q = world_change.rotation_matrix();
  const Mat3 r = cam.rotation() * q.transpose();
  const Vec3 c = world_change.apply(cam.center());
  LpbCamera out = cam;
  out.world_to_camera = Rigid3::from_matrix(r, -(r * c));
  return out;
}

std::vector<PixelSample> sample_batch(const Dataset& dataset, int batch_rays, std::uint64_t seed,
                                      std::uint64_t iteration) {
  if (dataset.images.empty()) throw Error(Errc::InvalidArgument, "dataset has no images");
  Rng rng(hash_seed(seed, 0x62617463ULL, iteration));
  std::vector<PixelSample> batch(static_cast<std::size_t>(batch_rays));
  for (auto& px : batch) {
    px.view = int(rng.below(dataset.images.size()));
    const auto& img = dataset.images[std::size_t(px.view)];
    const int x = int(rng.below(std::uint64_t(img.width)));
    const int y = int(rng.below(std::uint64_t(img.height)));
    px.u = x + 0.5;
    px.v = y + 0.5;
    px.rgb = Vec3(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
  }
  return batch;
}

TrainResult train(const Dataset& dataset, std::span<const LpbCamera> init_cameras,
                  const TrainConfig& cfg, std::span<const LpbCamera> gt_cameras,
                  const std::function<void(const HistoryRow&, const ParamSet<float>&)>& on_log) {
  if (dataset.images.size() < 2) throw Error(Errc::InvalidArgument, "training needs >= 2 views");
  if (init_cameras.size() != dataset.images.size()) {
    throw Error(Errc::DimMismatch, "one initial camera per training image");
  }
  if (!gt_cameras.empty() && gt_cameras.size() != init_cameras.size()) {
    throw Error(Errc::DimMismatch, "one ground-truth camera per training image");
  }
  if (cfg.iterations < 0 || cfg.batch_rays < 1) {
    throw Error(Errc::InvalidArgument, "iterations must be >= 0 and batch_rays >= 1");
  }
  if (cfg.c2f_end > 0 && !(cfg.c2f_start >= 0 && cfg.c2f_start <= cfg.c2f_end &&
                           cfg.c2f_end <= cfg.iterations)) {
    throw Error(Errc::InvalidArgument, "coarse-to-fine needs 0 <= start <= end <= iterations");
  }

  TrainResult result;
  ParamSet<float>& p = result.params;
  p.field = make_field<float>(cfg.field, cfg.seed);
  p.color = make_color<float>(cfg.field.n_spectral, cfg.color, cfg.seed);
  for (const auto& cam : init_cameras)
    p.views.push_back(ViewParams::from_camera(cam, cfg.pivot_at_center ? dataset.bounds.center() : cam.center()));
  p.s = init_cameras.front().intrinsics.s;

  const bool c2f = cfg.c2f_end > 0;
  auto band_weights = [&](int it) {
    return c2f ? c2f_weights(it, cfg.c2f_start, cfg.c2f_end, cfg.field.bands)
               : std::vector<double>(std::size_t(cfg.field.bands), 1.0);
  };

  AdamState<float> adam = AdamState<float>::zeros_like(p);
  Gradients<float> grads;
  BatchContext ctx{dataset.bounds, cfg.render, cfg.seed, 0};
  const int warmup = int(std::ceil(cfg.intrinsics_warmup * cfg.iterations));
  const int pose_warmup = int(std::ceil(cfg.pose_warmup * cfg.iterations));

  double window_loss = 0.0;
  int window_count = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    p.field.encoder.weights = band_weights(it);
    const auto batch = sample_batch(dataset, cfg.batch_rays, cfg.seed, std::uint64_t(it));
    LearnFlags flags;
    flags.pose = cfg.refine_pose && it >= pose_warmup;
    flags.intrinsics = cfg.refine_intrinsics && it >= warmup;
    flags.scale = cfg.refine_scale;
    ctx.iteration = std::uint64_t(it);

    double loss;
    try {
      loss = backward<float>(p, batch, ctx, flags, grads);
    } catch (const Error& e) {
      if (e.code() == Errc::NonFiniteGradient) throw Error(Errc::Diverged, e.what());
      throw;
    }
    if (std::isnan(loss)) throw Error(Errc::Diverged, "loss became NaN");

    const double decay = cfg.iterations > 0 ? std::pow(cfg.lr_final_ratio, double(it) / cfg.iterations) : 1.0;
    LearningRates lr = cfg.lr;
    lr.field *= decay;
    lr.color *= decay;
    lr.rotation *= decay;
    lr.translation *= decay;
    lr.focal *= decay;
    lr.distortion *= decay;
    lr.scale *= decay;
    adam_step(adam, p, grads, lr, cfg.adam, flags);

    window_loss += loss;
    ++window_count;
    const bool last = it + 1 == cfg.iterations;
    if ((cfg.log_every > 0 && (it + 1) % cfg.log_every == 0) || last) {
      HistoryRow row;
      row.iteration = it + 1;
      row.loss = window_loss / window_count;
      const double mse = row.loss / (3.0 * cfg.batch_rays);
      row.psnr = mse > 0.0 ? -10.0 * std::log10(mse) : std::numeric_limits<double>::infinity();
      if (!gt_cameras.empty()) {
        for (std::size_t v = 0; v < p.views.size(); ++v) {
          row.pose.push_back(pose_error(p.views[v].camera(p.s), gt_cameras[v]));
        }
      }
      result.history.push_back(row);
      if (on_log) {
        p.field.encoder.weights = band_weights(it + 1);
        on_log(row, p);
      }
      window_loss = 0.0;
      window_count = 0;
    }
  }
  p.field.encoder.weights = band_weights(cfg.iterations);
  return result;
}

std::string history_csv(const std::vector<HistoryRow>& history) {
  std::ostringstream out;
  const std::size_t views = history.empty() ? 0 : history.front().pose.size();
  out << "iteration,loss,psnr";
  if (views > 0) out << ",mean_rot_deg,mean_trans";
  for (std::size_t v = 0; v < views; ++v) out << ",rot_deg_" << v << ",trans_" << v;
  out << "\n";
  char buf[64];
  auto num = [&buf](double x) {
    std::snprintf(buf, sizeof(buf), "%.9g", x);
    return std::string(buf);
  };
  for (const auto& row : history) {
    out << row.iteration << ',' << num(row.loss) << ',' << num(row.psnr);
    if (views > 0) {
      double rot = 0.0, trans = 0.0;
      for (const auto& e : row.pose) {
        rot += e.rot_deg;
        trans += e.trans;
      }
      out << ',' << num(rot / views) << ',' << num(trans / views);
      for (const auto& e : row.pose) out << ',' << num(e.rot_deg) << ',' << num(e.trans);
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace xnaf
