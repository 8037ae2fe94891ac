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

// Implicit attenuation field and colour-coding network.
//
//   FieldNet:  position -> frequency encoding -> MLP -> softplus -> mu (n channels)
//   ColorNet:  transmittance (n channels) -> MLP -> sigmoid -> RGB
//
// Networks are templated on the scalar type: training runs in float, the
// gradient oracle in double.  All batched code keeps one sample per column.

#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "xnaf/error.hpp"
#include "xnaf/geometry.hpp"
#include "xnaf/rng.hpp"

namespace xnaf {

template <class S>
using MatX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <class S>
using VecX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

struct FreqEncoder {
  int bands = 8;
  bool include_input = true;
  std::vector<double> weights;  // per band, in [0, 1]

  static FreqEncoder make(int bands, bool include_input = true) {
    return {bands, include_input, std::vector<double>(std::size_t(bands), 1.0)};
  }

  int output_dim() const { return 3 * ((include_input ? 1 : 0) + 2 * bands); }
};

// Feature layout per point: [p] then for each band l
// [w_l sin(2^l pi p), w_l cos(2^l pi p)], each block over the three axes.
template <class S>
MatX<S> encode_batch(const FreqEncoder& enc, const MatX<S>& positions) {
  const Eigen::Index n = positions.cols();
  MatX<S> out(enc.output_dim(), n);
  int row = 0;
  if (enc.include_input) {
    out.topRows(3) = positions;
    row = 3;
  }
  for (int l = 0; l < enc.bands; ++l) {
    const S freq = S(std::ldexp(M_PI, l));
    const S w = S(enc.weights[std::size_t(l)]);
    const auto scaled = (positions.array() * freq).eval();
    out.middleRows(row, 3).array() = w * scaled.sin();
    out.middleRows(row + 3, 3).array() = w * scaled.cos();
    row += 6;
  }
  return out;
}

/// Gradient of the encoding w.r.t. positions given upstream feature grads.
template <class S>
MatX<S> encode_backward(const FreqEncoder& enc, const MatX<S>& positions,
                        const MatX<S>& d_features) {
  MatX<S> d_pos = MatX<S>::Zero(3, positions.cols());
  int row = 0;
  if (enc.include_input) {
    d_pos = d_features.topRows(3);
    row = 3;
  }
  for (int l = 0; l < enc.bands; ++l) {
    const S freq = S(std::ldexp(M_PI, l));
    const S wf = S(enc.weights[std::size_t(l)]) * freq;
    if (wf != S(0)) {
      const auto scaled = (positions.array() * freq).eval();
      d_pos.array() += wf * (d_features.middleRows(row, 3).array() * scaled.cos() -
                             d_features.middleRows(row + 3, 3).array() * scaled.sin());
    }
    row += 6;
  }
  return d_pos;
}

std::vector<double> encode(const FreqEncoder& enc, const Vec3& p);

enum class Activation { Softplus, Sigmoid, Identity };

/// Dense MLP with all parameters in one contiguous vector: for each layer
/// the column-major weight block (out x in) followed by the bias.
template <class S>
class Mlp {
 public:
  struct Cache {
    std::vector<MatX<S>> inputs;  // input to each layer
    std::vector<MatX<S>> pre;     // pre-activation of each layer
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation hidden, Activation output, double hidden_beta = 1.0)
      : sizes_(std::move(sizes)), hidden_(hidden), output_(output), beta_(hidden_beta) {
    if (sizes_.size() < 2) throw Error(Errc::InvalidArgument, "MLP needs at least two layer sizes");
    std::size_t total = 0;
    for (std::size_t k = 0; k + 1 < sizes_.size(); ++k) {
      if (sizes_[k] < 1 || sizes_[k + 1] < 1) throw Error(Errc::InvalidArgument, "layer size");
      offsets_.push_back(total);
      total += std::size_t(sizes_[k]) * sizes_[k + 1] + sizes_[k + 1];
    }
    params_ = VecX<S>::Zero(Eigen::Index(total));
  }

  const std::vector<int>& sizes() const { return sizes_; }
  int layers() const { return int(sizes_.size()) - 1; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  Activation hidden_activation() const { return hidden_; }
  Activation output_activation() const { return output_; }
  double hidden_beta() const { return beta_; }

  VecX<S>& params() { return params_; }
  const VecX<S>& params() const { return params_; }

  Eigen::Map<MatX<S>> weight(int k) {
    return {params_.data() + offsets_[k], sizes_[k + 1], sizes_[k]};
  }
  Eigen::Map<const MatX<S>> weight(int k) const {
    return {params_.data() + offsets_[k], sizes_[k + 1], sizes_[k]};
  }
  Eigen::Map<VecX<S>> bias(int k) {
    return {params_.data() + offsets_[k] + std::size_t(sizes_[k]) * sizes_[k + 1], sizes_[k + 1]};
  }
  Eigen::Map<const VecX<S>> bias(int k) const {
    return {params_.data() + offsets_[k] + std::size_t(sizes_[k]) * sizes_[k + 1], sizes_[k + 1]};
  }

  /// He-uniform for hidden layers, Glorot-uniform for the output layer,
  /// zero biases.
  void init(Rng& rng) {
    for (int k = 0; k < layers(); ++k) {
      const double fan_in = sizes_[k], fan_out = sizes_[k + 1];
      const double a = k + 1 < layers() ? std::sqrt(6.0 / fan_in) : std::sqrt(6.0 / (fan_in + fan_out));
      auto w = weight(k);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = S(rng.uniform(-a, a));
      bias(k).setZero();
    }
  }

  MatX<S> forward(const MatX<S>& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim()) throw Error(Errc::DimMismatch, "MLP input dimension");
    if (cache) {
      cache->inputs.resize(std::size_t(layers()));
      cache->pre.resize(std::size_t(layers()));
    }
    MatX<S> a = x;
    for (int k = 0; k < layers(); ++k) {
      MatX<S> z = weight(k) * a;
      z.colwise() += bias(k);
      const bool last = k + 1 == layers();
      MatX<S> next = activate(z, last ? output_ : hidden_, last ? 1.0 : beta_);
      if (cache) {
        cache->inputs[std::size_t(k)] = std::move(a);
        cache->pre[std::size_t(k)] = std::move(z);
      }
      a = std::move(next);
    }
    return a;
  }

  /// Accumulates parameter gradients into `grad` (same layout as params())
  /// and returns the gradient w.r.t. the network input.
  MatX<S> backward(const Cache& cache, const MatX<S>& d_out, VecX<S>& grad) const {
    MatX<S> delta = d_out;
    for (int k = layers() - 1; k >= 0; --k) {
      const bool last = k + 1 == layers();
      delta.array() *= activate_slope(cache.pre[std::size_t(k)], last ? output_ : hidden_,
                                      last ? 1.0 : beta_).array();
      Eigen::Map<MatX<S>> gw(grad.data() + offsets_[k], sizes_[k + 1], sizes_[k]);
      Eigen::Map<VecX<S>> gb(grad.data() + offsets_[k] + std::size_t(sizes_[k]) * sizes_[k + 1],
                             sizes_[k + 1]);
      gw.noalias() += delta * cache.inputs[std::size_t(k)].transpose();
      gb += delta.rowwise().sum();
      MatX<S> d_in = weight(k).transpose() * delta;
      delta = std::move(d_in);
    }
    return delta;
  }

  template <class T>
  Mlp<T> cast() const {
    Mlp<T> out(sizes_, hidden_, output_, beta_);
    out.params() = params_.template cast<T>();
    return out;
  }

  static MatX<S> activate(const MatX<S>& z, Activation act, double beta) {
    switch (act) {
      case Activation::Softplus: {
        const S b = S(beta);
        return (z.array().max(S(0)) + ((-b * z.array().abs()).exp()).log1p() / b).matrix();
      }
      case Activation::Sigmoid:
        return (S(1) / (S(1) + (-z.array()).exp())).matrix();
      case Activation::Identity:
        return z;
    }
    return z;
  }

  static MatX<S> activate_slope(const MatX<S>& z, Activation act, double beta) {
    switch (act) {
      case Activation::Softplus:
        return (S(1) / (S(1) + (-S(beta) * z.array()).exp())).matrix();
      case Activation::Sigmoid: {
        const auto sig = (S(1) / (S(1) + (-z.array()).exp())).eval();
        return (sig * (S(1) - sig)).matrix();
      }
      case Activation::Identity:
        return MatX<S>::Ones(z.rows(), z.cols());
    }
    return z;
  }

 private:
  std::vector<int> sizes_;
  Activation hidden_ = Activation::Softplus;
  Activation output_ = Activation::Identity;
  double beta_ = 1.0;
  std::vector<std::size_t> offsets_;
  VecX<S> params_;
};

struct FieldArch {
  int n_spectral = 3;
  int bands = 8;
  bool include_input = true;
  int hidden = 128;
  int depth = 4;  // hidden layers
  double hidden_beta = 1.0;
  double output_bias = 0.0;  // initial bias of the softplus output
};

struct ColorArch {
  int hidden = 32;
  int depth = 2;
  double hidden_beta = 1.0;
};

template <class S>
struct FieldNet {
  FreqEncoder encoder;
  Mlp<S> mlp;  // softplus output, n_spectral wide

  int n_spectral() const { return mlp.output_dim(); }

  /// positions 3 x N -> mu n x N, all >= 0.
  MatX<S> forward(const MatX<S>& positions) const {
    return mlp.forward(encode_batch<S>(encoder, positions));
  }

  template <class T>
  FieldNet<T> cast() const {
    return {encoder, mlp.template cast<T>()};
  }
};

template <class S>
struct ColorNet {
  Mlp<S> mlp;  // n_spectral -> 3, sigmoid output

  MatX<S> forward(const MatX<S>& transmittance) const { return mlp.forward(transmittance); }

  template <class T>
  ColorNet<T> cast() const {
    return {mlp.template cast<T>()};
  }
};

template <class S>
FieldNet<S> make_field(const FieldArch& arch, std::uint64_t seed) {
  FieldNet<S> net;
  net.encoder = FreqEncoder::make(arch.bands, arch.include_input);
  std::vector<int> sizes{net.encoder.output_dim()};
  for (int k = 0; k < arch.depth; ++k) sizes.push_back(arch.hidden);
  sizes.push_back(arch.n_spectral);
  net.mlp = Mlp<S>(sizes, Activation::Softplus, Activation::Softplus, arch.hidden_beta);
  Rng rng(hash_seed(seed, 0x6669656cULL));
  net.mlp.init(rng);
  net.mlp.bias(net.mlp.layers() - 1).setConstant(S(arch.output_bias));
  return net;
}

template <class S>
ColorNet<S> make_color(int n_spectral, const ColorArch& arch, std::uint64_t seed) {
  std::vector<int> sizes{n_spectral};
  for (int k = 0; k < arch.depth; ++k) sizes.push_back(arch.hidden);
  sizes.push_back(3);
  ColorNet<S> net{Mlp<S>(sizes, Activation::Softplus, Activation::Sigmoid, arch.hidden_beta)};
  Rng rng(hash_seed(seed, 0x636f6c6fULL));
  net.mlp.init(rng);
  return net;
}

struct RenderConfig {
  int samples = 64;
  bool stratified = true;
  std::vector<double> incident;  // per channel; empty means all ones

  double incident_at(int channel) const {
    return incident.empty() ? 1.0 : incident[std::size_t(channel)];
  }
};

template <class S>
std::vector<double> field_forward(const FieldNet<S>& net, const Vec3& p) {
  MatX<S> pos(3, 1);
  pos << S(p.x()), S(p.y()), S(p.z());
  const MatX<S> mu = net.forward(pos);
  std::vector<double> out(std::size_t(mu.rows()));
  for (Eigen::Index j = 0; j < mu.rows(); ++j) out[std::size_t(j)] = double(mu(j, 0));
  return out;
}

template <class S>
Vec3 color_forward(const ColorNet<S>& net, std::span<const double> transmittance) {
  MatX<S> t(Eigen::Index(transmittance.size()), 1);
  for (std::size_t j = 0; j < transmittance.size(); ++j) t(Eigen::Index(j), 0) = S(transmittance[j]);
  const MatX<S> rgb = net.forward(t);
  return {double(rgb(0, 0)), double(rgb(1, 0)), double(rgb(2, 0))};
}

/// Per-channel sum_i mu_ij * delta_i; rows of `mu_samples` are samples.
Eigen::VectorXd accumulate(const Eigen::MatrixXd& mu_samples, std::span<const double> deltas);

/// Stratum offset in [0, 1) for sample `i` of ray `ray_id`, or 0.5 when
/// sampling is not stratified.
double stratum_jitter(const RenderConfig& cfg, std::uint64_t seed, std::uint64_t iteration,
                      std::uint64_t ray_id, int i);

/// Ray restricted to the bounds; nullopt on a miss.
std::optional<Ray> clip_to_bounds(const Ray& ray, const Aabb& bounds);

/// Colour of a batch of clipped rays (nullopt = miss).  Returns 3 x R.
template <class S>
Eigen::Matrix3Xd render_rays(const FieldNet<S>& field, const ColorNet<S>& color,
                             const RenderConfig& cfg, std::span<const std::optional<Ray>> rays,
                             std::uint64_t seed = 0, std::uint64_t iteration = 0) {
  const int ns = cfg.samples;
  if (ns < 2) throw Error(Errc::InvalidArgument, "need at least two samples per ray");
  const Eigen::Index nr = Eigen::Index(rays.size());
  const int nc = field.n_spectral();
  MatX<S> pos = MatX<S>::Zero(3, nr * ns);
  std::vector<double> delta(std::size_t(nr), 0.0);
  for (Eigen::Index r = 0; r < nr; ++r) {
    const auto& ray = rays[std::size_t(r)];
    if (!ray || !(ray->t_far > ray->t_near)) continue;
    const double span = ray->t_far - ray->t_near;
    delta[std::size_t(r)] = span / ns;
    for (int i = 0; i < ns; ++i) {
      const double a = (i + stratum_jitter(cfg, seed, iteration, std::uint64_t(r), i)) / ns;
      const Vec3 x = ray->at(ray->t_near + a * span);
      pos.col(r * ns + i) = x.cast<S>();
    }
  }
  const MatX<S> mu = field.forward(pos);
  MatX<S> trans(nc, nr);
  for (Eigen::Index r = 0; r < nr; ++r) {
    for (int j = 0; j < nc; ++j) {
      const double a = double(mu.row(j).segment(r * ns, ns).sum()) * delta[std::size_t(r)];
      trans(j, r) = S(cfg.incident_at(j) * std::exp(-a));
    }
  }
  return color.forward(trans).template cast<double>();
}

template <class S>
Vec3 render_ray(const FieldNet<S>& field, const ColorNet<S>& color, const RenderConfig& cfg,
                const std::optional<Ray>& ray, std::uint64_t seed = 0, std::uint64_t iteration = 0) {
  const std::optional<Ray> rays[1] = {ray};
  return render_rays(field, color, cfg, std::span<const std::optional<Ray>>(rays), seed, iteration).col(0);
}

}  // namespace xnaf
