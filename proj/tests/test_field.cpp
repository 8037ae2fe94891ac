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
#include "xnaf/field.hpp"
#include "xnaf/projector.hpp"

using namespace xnaf;
using doctest::Approx;

TEST_CASE("frequency encoding examples") {
  const FreqEncoder enc = FreqEncoder::make(2, true);
  CHECK(enc.output_dim() == 15);
  const auto zero = encode(enc, Vec3::Zero());
  const std::vector<double> expect_zero{0, 0, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 1, 1, 1};
  CHECK(zero == expect_zero);

  const auto half = encode(enc, Vec3(0.5, 0, 0));
  CHECK(half[0] == 0.5);
  CHECK(half[3] == Approx(1.0));   // sin(pi/2)
  CHECK(half[6] == Approx(0.0).epsilon(1e-15));
  CHECK(half[9] == Approx(0.0).epsilon(1e-15).scale(1.0));   // sin(pi)
  CHECK(half[12] == Approx(-1.0));  // cos(pi)

  const FreqEncoder bare = FreqEncoder::make(3, false);
  CHECK(bare.output_dim() == 18);
  CHECK(encode(bare, Vec3(0.1, 0.2, 0.3)).size() == 18);
}

TEST_CASE("band weights scale their features and zero weights remove them") {
  FreqEncoder enc = FreqEncoder::make(3, true);
  const Vec3 p(0.13, -0.4, 0.77);
  const auto full = encode(enc, p);
  enc.weights = {1.0, 0.5, 0.0};
  const auto part = encode(enc, p);
  for (int i = 0; i < 9; ++i) CHECK(part[std::size_t(i)] == full[std::size_t(i)]);
  for (int i = 9; i < 15; ++i) CHECK(part[std::size_t(i)] == Approx(0.5 * full[std::size_t(i)]));
  for (int i = 15; i < 21; ++i) CHECK(part[std::size_t(i)] == 0.0);
}

TEST_CASE("encoding gradient matches central differences") {
  FreqEncoder enc = FreqEncoder::make(4, true);
  enc.weights = {1.0, 1.0, 0.3, 0.0};
  Rng rng(2);
  Eigen::MatrixXd pos = Eigen::MatrixXd::Random(3, 5);
  Eigen::MatrixXd up(enc.output_dim(), 5);
  for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = rng.uniform(-1, 1);
  const Eigen::MatrixXd d = encode_backward<double>(enc, pos, up);
  const double h = 1e-6;
  for (Eigen::Index c = 0; c < 5; ++c)
    for (int a = 0; a < 3; ++a) {
      Eigen::MatrixXd pp = pos, pm = pos;
      pp(a, c) += h;
      pm(a, c) -= h;
      const double num =
          ((encode_batch<double>(enc, pp) - encode_batch<double>(enc, pm)).cwiseProduct(up)).sum() / (2 * h);
      CHECK(d(a, c) == Approx(num).epsilon(1e-7));
    }
}

TEST_CASE("MLP backward matches central differences") {
  for (Activation out : {Activation::Softplus, Activation::Sigmoid, Activation::Identity}) {
    Mlp<double> mlp({4, 6, 5, 2}, Activation::Softplus, out, 2.0);
    Rng rng(9);
    mlp.init(rng);
    for (Eigen::Index i = 0; i < mlp.params().size(); ++i) mlp.params()[i] += rng.uniform(-0.1, 0.1);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(4, 3);
    const Eigen::MatrixXd up = Eigen::MatrixXd::Random(2, 3);
    Mlp<double>::Cache cache;
    mlp.forward(x, &cache);
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(mlp.params().size());
    const Eigen::MatrixXd dx = mlp.backward(cache, up, grad);
    const double h = 1e-6;
    auto objective = [&](const Mlp<double>& m, const Eigen::MatrixXd& in) {
      return m.forward(in).cwiseProduct(up).sum();
    };
    for (Eigen::Index i = 0; i < grad.size(); i += 3) {
      Mlp<double> p = mlp, m = mlp;
      p.params()[i] += h;
      m.params()[i] -= h;
      const double num = (objective(p, x) - objective(m, x)) / (2 * h);
      CHECK(grad[i] == Approx(num).epsilon(1e-6).scale(1e-3));
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      Eigen::MatrixXd xp = x, xm = x;
      xp.data()[i] += h;
      xm.data()[i] -= h;
      const double num = (objective(mlp, xp) - objective(mlp, xm)) / (2 * h);
      CHECK(dx.data()[i] == Approx(num).epsilon(1e-6).scale(1e-3));
    }
  }
}

TEST_CASE("layer size validation") {
  CHECK_THROWS_AS(Mlp<float>({3}, Activation::Softplus, Activation::Identity), Error);
  CHECK_THROWS_AS(Mlp<float>({3, 0, 1}, Activation::Softplus, Activation::Identity), Error);
  Mlp<float> m({3, 2}, Activation::Softplus, Activation::Identity);
  CHECK_THROWS_AS(m.forward(MatX<float>::Zero(4, 1)), Error);
}

TEST_CASE("attenuation field is non-negative everywhere") {
  FieldArch arch;
  arch.hidden = 32;
  arch.depth = 2;
  arch.output_bias = -6.0;
  const FieldNet<float> net = make_field<float>(arch, 3);
  CHECK(net.n_spectral() == 3);
  MatX<float> pos = MatX<float>::Random(3, 2000) * 4.0f;
  const MatX<float> mu = net.forward(pos);
  CHECK(mu.minCoeff() >= 0.0f);
}

TEST_CASE("network construction is seed-deterministic") {
  FieldArch arch;
  arch.hidden = 16;
  arch.depth = 2;
  CHECK(make_field<float>(arch, 4).mlp.params() == make_field<float>(arch, 4).mlp.params());
  CHECK(make_field<float>(arch, 4).mlp.params() != make_field<float>(arch, 5).mlp.params());
  const auto as_double = make_field<float>(arch, 4).cast<double>();
  CHECK(as_double.mlp.params().cast<float>() == make_field<float>(arch, 4).mlp.params());
}

TEST_CASE("accumulate examples and validation") {
  Eigen::MatrixXd mu(3, 2);
  mu << 1, 0, 2, 1, 0.5, 4;
  const double deltas[3] = {0.1, 0.2, 0.4};
  const Eigen::VectorXd a = accumulate(mu, deltas);
  CHECK(a[0] == Approx(0.7));
  CHECK(a[1] == Approx(1.8));
  const double bad[2] = {0.1, 0.2};
  CHECK_THROWS_AS(accumulate(mu, bad), Error);
  const double neg[3] = {0.1, -0.2, 0.4};
  CHECK_THROWS_AS(accumulate(mu, neg), Error);
}

TEST_CASE("accumulate agrees with the voxel projector on shared samples") {
  const SpectralScene scene = make_phantom(12, 3);
  const VoxelGrid grid = voxelize(scene, {32, 32, 32}, SpectralBasis::dual_energy());
  Rng rng(1);
  for (int k = 0; k < 10; ++k) {
    Ray ray;
    ray.direction = test::random_unit(rng);
    ray.origin = -3.0 * ray.direction + 0.3 * ray.direction.unitOrthogonal();
    const double step = 0.013;
    const auto hit = ray_aabb_clip(ray, grid.bounds());
    REQUIRE(hit);
    const auto smp = midpoint_samples(hit->t_near, hit->t_far, step);
    Eigen::MatrixXd mu(Eigen::Index(smp.size()), grid.channels());
    std::vector<double> deltas, val(std::size_t(grid.channels()));
    for (std::size_t i = 0; i < smp.size(); ++i) {
      grid.sample(ray.at(smp[i].t), val);
      for (int c = 0; c < grid.channels(); ++c) mu(Eigen::Index(i), c) = val[std::size_t(c)];
      deltas.push_back(smp[i].delta);
    }
    const Eigen::VectorXd acc = accumulate(mu, deltas);
    const auto ref = line_integral(grid, ray, step);
    for (int c = 0; c < grid.channels(); ++c)
      CHECK(std::abs(acc[c] - ref[std::size_t(c)]) <= 1e-12 * std::max(1.0, std::abs(ref[std::size_t(c)])));
  }
}

TEST_CASE("stratum jitter") {
  RenderConfig cfg;
  cfg.stratified = false;
  CHECK(stratum_jitter(cfg, 1, 2, 3, 4) == 0.5);
  cfg.stratified = true;
  double lo = 1, hi = 0;
  for (int i = 0; i < 1000; ++i) {
    const double j = stratum_jitter(cfg, 1, 2, 3, i);
    lo = std::min(lo, j);
    hi = std::max(hi, j);
    CHECK(j == stratum_jitter(cfg, 1, 2, 3, i));
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  CHECK(hi - lo > 0.9);
}

TEST_CASE("missed rays bypass the field and see the incident spectrum") {
  FieldArch arch;
  arch.hidden = 16;
  arch.depth = 2;
  arch.n_spectral = 2;
  const auto field = make_field<double>(arch, 1);
  const auto color = make_color<double>(2, ColorArch{}, 1);
  RenderConfig cfg;
  cfg.incident = {1.0, 0.8};
  const Vec3 miss = render_ray(field, color, cfg, std::nullopt);
  const double inc[2] = {1.0, 0.8};
  CHECK((miss - color_forward(color, inc)).norm() < 1e-12);

  Ray outside;
  outside.origin = Vec3(0, 5, -3);
  outside.direction = Vec3(0, 0, 1);
  CHECK_FALSE(clip_to_bounds(outside, Aabb{}));
  Ray through = outside;
  through.origin.y() = 0.0;
  const auto clipped = clip_to_bounds(through, Aabb{});
  REQUIRE(clipped);
  CHECK(clipped->t_near == Approx(2.0));
  CHECK(clipped->t_far == Approx(4.0));

  cfg.samples = 1;
  CHECK_THROWS_AS(render_ray(field, color, cfg, clipped), Error);
}

TEST_CASE("colour network output lies in the unit cube and is continuous") {
  const auto color = make_color<double>(3, ColorArch{}, 7);
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double t[3] = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
    const Vec3 rgb = color_forward(color, t);
    CHECK(rgb.minCoeff() > 0.0);
    CHECK(rgb.maxCoeff() < 1.0);
    const double tp[3] = {t[0] + 1e-7, t[1] - 1e-7, t[2] + 1e-7};
    CHECK((color_forward(color, tp) - rgb).norm() < 1e-5);
  }
}

TEST_CASE("more attenuation never brightens the transmittance fed to colour") {
  // With an identity-like colour probe the rendered value is monotone in mu.
  FieldArch arch;
  arch.hidden = 8;
  arch.depth = 1;
  arch.n_spectral = 1;
  auto field = make_field<double>(arch, 2);
  ColorNet<double> probe{Mlp<double>({1, 3}, Activation::Softplus, Activation::Sigmoid)};
  probe.mlp.weight(0).setConstant(1.0);
  RenderConfig cfg;
  cfg.stratified = false;
  Ray r;
  r.origin = Vec3(0, 0, -3);
  r.direction = Vec3(0, 0, 1);
  const auto clipped = clip_to_bounds(r, Aabb{});
  const double before = render_ray(field, probe, cfg, clipped).x();
  field.mlp.bias(field.mlp.layers() - 1).array() += 1.0;
  CHECK(render_ray(field, probe, cfg, clipped).x() < before);
}
