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

#include "xnaf/field.hpp"

namespace xnaf {

std::vector<double> encode(const FreqEncoder& enc, const Vec3& p) {
  const Eigen::MatrixXd f = encode_batch<double>(enc, Eigen::MatrixXd(p));
  return {f.data(), f.data() + f.size()};
}

Eigen::VectorXd accumulate(const Eigen::MatrixXd& mu_samples, std::span<const double> deltas) {
  if (mu_samples.rows() != Eigen::Index(deltas.size())) {
    throw Error(Errc::DimMismatch, "one delta per sample");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(mu_samples.cols());
  for (Eigen::Index i = 0; i < mu_samples.rows(); ++i) {
    if (deltas[std::size_t(i)] < 0.0) throw Error(Errc::InvalidArgument, "negative delta");
    for (Eigen::Index j = 0; j < mu_samples.cols(); ++j) {
      out[j] += mu_samples(i, j) * deltas[std::size_t(i)];
    }
  }
  return out;
}

double stratum_jitter(const RenderConfig& cfg, std::uint64_t seed, std::uint64_t iteration,
                      std::uint64_t ray_id, int i) {
  if (!cfg.stratified) return 0.5;
  return unit_double(hash_seed(seed, iteration, ray_id, std::uint64_t(i)));
}

std::optional<Ray> clip_to_bounds(const Ray& ray, const Aabb& bounds) {
  const auto hit = ray_aabb_clip(ray, bounds);
  if (!hit) return std::nullopt;
  Ray out = ray;
  out.t_near = std::max(hit->t_near, ray.t_near);
  out.t_far = std::min(hit->t_far, ray.t_far);
  if (out.t_near > out.t_far) return std::nullopt;
  return out;
}

}  // namespace xnaf
