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

#include <algorithm>
#include <cmath>
#include <string>

#include "xnaf/rng.hpp"
#include "xnaf/trainer.hpp"

namespace xnaf {

namespace {

const char* const kDofNames[kCameraDof] = {"f",     "cx",    "k1",    "k2",    "rot_x",
                                           "rot_y", "rot_z", "trans_x", "trans_y", "trans_z"};

double relative_error(double analytic, double numeric) {
  const double scale = std::max(std::abs(analytic), std::abs(numeric));
  if (scale < 1e-12) return 0.0;
  return std::abs(analytic - numeric) / scale;
}

}  // namespace

GradCheckReport run_gradient_check(std::uint64_t seed, double h, double tol) {
  Rng rng(hash_seed(seed, 0x67726164ULL));

  RigConfig rig;
  rig.views = 2;
  rig.spacing_deg = 70.0;
  rig.width = 32;
  rig.height = 32;
  const auto cams = make_fan_rig(rig);

  FieldArch arch;
  arch.n_spectral = 3;
  arch.bands = 2;
  arch.hidden = 8;
  arch.depth = 2;
  arch.output_bias = -0.5;
  ColorArch carch;
  carch.hidden = 8;
  carch.depth = 1;

  ParamSet<double> p;
  p.field = make_field<double>(arch, seed);
  p.field.encoder.weights = {1.0, 0.5};
  p.color = make_color<double>(arch.n_spectral, carch, seed);
  for (auto& b : p.color.mlp.params()) b *= 2.0;  // livelier colour response
  p.s = cams.front().intrinsics.s;
  for (const auto& cam : cams) {
    ViewParams v = ViewParams::from_camera(cam, Vec3(0.1, -0.2, 0.15));
    v.dof[kSlotK1] = 0.02;
    v.dof[kSlotK2] = -0.005;
    for (int k = 0; k < 3; ++k) {
      v.dof[std::size_t(kSlotRot + k)] = rng.uniform(-0.02, 0.02);
      v.dof[std::size_t(kSlotTrans + k)] = rng.uniform(-0.05, 0.05);
    }
    p.views.push_back(v);
  }

  std::vector<PixelSample> batch(4);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    batch[r].view = int(r % 2);
    batch[r].u = rng.uniform(10.0, 22.0);
    batch[r].v = rng.uniform(10.0, 22.0);
    batch[r].rgb = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
  }

  BatchContext ctx;
  ctx.render.samples = 8;
  ctx.render.stratified = true;
  ctx.seed = seed;
  ctx.iteration = 3;

  LearnFlags flags;
  flags.scale = true;
  Gradients<double> grads;
  backward<double>(p, batch, ctx, flags, grads);

  GradCheckReport report;
  auto check = [&](const std::string& name, double& value, double analytic) {
    const double saved = value;
    value = saved + h;
    const double up = photometric_loss<double>(p, batch, ctx);
    value = saved - h;
    const double down = photometric_loss<double>(p, batch, ctx);
    value = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = relative_error(analytic, numeric);
    report.entries.push_back({name, analytic, numeric, err});
    report.max_rel_error = std::max(report.max_rel_error, err);
  };

  auto& fp = p.field.mlp.params();
  for (Eigen::Index i = 0; i < fp.size(); ++i) check("field[" + std::to_string(i) + "]", fp[i], grads.field[i]);
  auto& cp = p.color.mlp.params();
  for (Eigen::Index i = 0; i < cp.size(); ++i) check("color[" + std::to_string(i) + "]", cp[i], grads.color[i]);
  for (std::size_t v = 0; v < p.views.size(); ++v) {
    for (int k = 0; k < kCameraDof; ++k) {
      check("view" + std::to_string(v) + "." + kDofNames[k], p.views[v].dof[std::size_t(k)],
            grads.views[v][std::size_t(k)]);
    }
  }
  check("s", p.s, grads.s);

  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace xnaf
