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

namespace xnaf {

nlohmann::json train_config_to_json(const TrainConfig& c) {
  return {
      {"iterations", c.iterations},
      {"batch_rays", c.batch_rays},
      {"lr",
       {{"field", c.lr.field},
        {"color", c.lr.color},
        {"rotation", c.lr.rotation},
        {"translation", c.lr.translation},
        {"focal", c.lr.focal},
        {"distortion", c.lr.distortion},
        {"scale", c.lr.scale}}},
      {"lr_final_ratio", c.lr_final_ratio},
      {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps}}},
      {"c2f_start", c.c2f_start},
      {"c2f_end", c.c2f_end},
      {"refine_pose", c.refine_pose},
      {"refine_intrinsics", c.refine_intrinsics},
      {"refine_scale", c.refine_scale},
      {"intrinsics_warmup", c.intrinsics_warmup},
      {"pose_warmup", c.pose_warmup},
      {"pivot_at_center", c.pivot_at_center},
      {"log_every", c.log_every},
      {"seed", c.seed},
      {"field",
       {{"n_spectral", c.field.n_spectral},
        {"bands", c.field.bands},
        {"include_input", c.field.include_input},
        {"hidden", c.field.hidden},
        {"depth", c.field.depth},
        {"hidden_beta", c.field.hidden_beta},
        {"output_bias", c.field.output_bias}}},
      {"color", {{"hidden", c.color.hidden}, {"depth", c.color.depth}, {"hidden_beta", c.color.hidden_beta}}},
      {"render", {{"samples", c.render.samples}, {"stratified", c.render.stratified}}},
  };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  auto get = [](const nlohmann::json& obj, const char* key, auto& dst) {
    if (obj.contains(key)) dst = obj.at(key).get<std::decay_t<decltype(dst)>>();
  };
  get(j, "iterations", c.iterations);
  get(j, "batch_rays", c.batch_rays);
  if (j.contains("lr")) {
    const auto& l = j.at("lr");
    get(l, "field", c.lr.field);
    get(l, "color", c.lr.color);
    get(l, "rotation", c.lr.rotation);
    get(l, "translation", c.lr.translation);
    get(l, "focal", c.lr.focal);
    get(l, "distortion", c.lr.distortion);
    get(l, "scale", c.lr.scale);
  }
  get(j, "lr_final_ratio", c.lr_final_ratio);
  if (j.contains("adam")) {
    const auto& a = j.at("adam");
    get(a, "beta1", c.adam.beta1);
    get(a, "beta2", c.adam.beta2);
    get(a, "eps", c.adam.eps);
  }
  get(j, "c2f_start", c.c2f_start);
  get(j, "c2f_end", c.c2f_end);
  get(j, "refine_pose", c.refine_pose);
  get(j, "refine_intrinsics", c.refine_intrinsics);
  get(j, "refine_scale", c.refine_scale);
  get(j, "intrinsics_warmup", c.intrinsics_warmup);
  get(j, "pose_warmup", c.pose_warmup);
  get(j, "pivot_at_center", c.pivot_at_center);
  get(j, "log_every", c.log_every);
  get(j, "seed", c.seed);
  if (j.contains("field")) {
    const auto& f = j.at("field");
    get(f, "n_spectral", c.field.n_spectral);
    get(f, "bands", c.field.bands);
    get(f, "include_input", c.field.include_input);
    get(f, "hidden", c.field.hidden);
    get(f, "depth", c.field.depth);
    get(f, "hidden_beta", c.field.hidden_beta);
    get(f, "output_bias", c.field.output_bias);
  }
  if (j.contains("color")) {
    const auto& f = j.at("color");
    get(f, "hidden", c.color.hidden);
    get(f, "depth", c.color.depth);
    get(f, "hidden_beta", c.color.hidden_beta);
  }
  if (j.contains("render")) {
    get(j.at("render"), "samples", c.render.samples);
    get(j.at("render"), "stratified", c.render.stratified);
  }
  return c;
}

}  // namespace xnaf
