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

#include "xnaf/checkpoint.hpp"

#include <algorithm>
#include <string>

#include "xnaf/io.hpp"

namespace xnaf {

namespace {

constexpr const char* kFormat = "xnaf-checkpoint-1";

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Softplus: return "softplus";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

Activation activation_from_name(const std::string& s) {
  if (s == "softplus") return Activation::Softplus;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "identity") return Activation::Identity;
  throw Error(Errc::BadCheckpoint, "unknown activation '" + s + "'");
}

nlohmann::json mlp_header(const Mlp<float>& mlp) {
  return {{"sizes", mlp.sizes()},
          {"hidden", activation_name(mlp.hidden_activation())},
          {"output", activation_name(mlp.output_activation())},
          {"hidden_beta", mlp.hidden_beta()}};
}

Mlp<float> mlp_from_header(const nlohmann::json& j) {
  return Mlp<float>(j.at("sizes").get<std::vector<int>>(),
                    activation_from_name(j.at("hidden").get<std::string>()),
                    activation_from_name(j.at("output").get<std::string>()),
                    j.at("hidden_beta").get<double>());
}

nlohmann::json view_header(const ViewParams& v, double s) {
  std::vector<double> r0(v.r0.data(), v.r0.data() + 9);
  return {{"r0", r0},
          {"c0", {v.c0.x(), v.c0.y(), v.c0.z()}},
          {"pivot", {v.pivot.x(), v.pivot.y(), v.pivot.z()}},
          {"width", v.width},
          {"height", v.height},
          {"dof", v.dof},
          {"camera", camera_to_json(v.camera(s))}};
}

ViewParams view_from_header(const nlohmann::json& j) {
  ViewParams v;
  const auto r0 = j.at("r0").get<std::vector<double>>();
  const auto c0 = j.at("c0").get<std::vector<double>>();
  const auto pivot = j.at("pivot").get<std::vector<double>>();
  if (r0.size() != 9 || c0.size() != 3 || pivot.size() != 3) throw Error(Errc::BadCheckpoint, "bad view pose");
  std::copy(r0.begin(), r0.end(), v.r0.data());
  v.c0 = Vec3(c0[0], c0[1], c0[2]);
  v.pivot = Vec3(pivot[0], pivot[1], pivot[2]);
  v.width = j.at("width").get<int>();
  v.height = j.at("height").get<int>();
  v.dof = j.at("dof").get<std::array<double, kCameraDof>>();
  return v;
}

}  // namespace

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ckpt) {
  const auto& p = ckpt.params;
  nlohmann::json views = nlohmann::json::array();
  for (const auto& v : p.views) views.push_back(view_header(v, p.s));
  const nlohmann::json header = {
      {"format", kFormat},
      {"iteration", ckpt.iteration},
      {"n_spectral", p.field.n_spectral()},
      {"bands", p.field.encoder.bands},
      {"include_input", p.field.encoder.include_input},
      {"band_weights", p.field.encoder.weights},
      {"field", mlp_header(p.field.mlp)},
      {"color", mlp_header(p.color.mlp)},
      {"render", {{"samples", ckpt.render.samples}, {"incident", ckpt.render.incident}}},
      {"s", p.s},
      {"bounds", aabb_to_json(ckpt.bounds)},
      {"views", views},
      {"param_counts", {p.field.mlp.params().size(), p.color.mlp.params().size()}}};
  const std::string text = header.dump();
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  bytes.push_back('\n');
  const auto& fw = p.field.mlp.params();
  const auto& cw = p.color.mlp.params();
  append_f32_le(bytes, std::span<const float>(fw.data(), std::size_t(fw.size())));
  append_f32_le(bytes, std::span<const float>(cw.data(), std::size_t(cw.size())));
  return bytes;
}

Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes) {
  const auto eol = std::find(bytes.begin(), bytes.end(), std::uint8_t('\n'));
  if (eol == bytes.end()) throw Error(Errc::BadCheckpoint, "missing checkpoint header");
  Checkpoint ckpt;
  try {
    const auto header = nlohmann::json::parse(bytes.begin(), eol);
    if (header.at("format").get<std::string>() != kFormat) {
      throw Error(Errc::BadCheckpoint, "unsupported checkpoint format");
    }
    auto& p = ckpt.params;
    ckpt.iteration = header.at("iteration").get<int>();
    p.field.encoder.bands = header.at("bands").get<int>();
    p.field.encoder.include_input = header.at("include_input").get<bool>();
    p.field.encoder.weights = header.at("band_weights").get<std::vector<double>>();
    if (int(p.field.encoder.weights.size()) != p.field.encoder.bands) {
      throw Error(Errc::BadCheckpoint, "band weight count");
    }
    p.field.mlp = mlp_from_header(header.at("field"));
    p.color.mlp = mlp_from_header(header.at("color"));
    if (p.field.mlp.input_dim() != p.field.encoder.output_dim() ||
        p.field.n_spectral() != header.at("n_spectral").get<int>() ||
        p.color.mlp.input_dim() != p.field.n_spectral() || p.color.mlp.output_dim() != 3) {
      throw Error(Errc::BadCheckpoint, "inconsistent architecture");
    }
    ckpt.render.samples = header.at("render").at("samples").get<int>();
    ckpt.render.incident = header.at("render").at("incident").get<std::vector<double>>();
    ckpt.render.stratified = false;
    p.s = header.at("s").get<double>();
    ckpt.bounds = aabb_from_json(header.at("bounds"));
    for (const auto& v : header.at("views")) p.views.push_back(view_from_header(v));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::BadCheckpoint, std::string("checkpoint header: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::BadCheckpoint) throw;
    throw Error(Errc::BadCheckpoint, e.what());
  }
  auto& fw = ckpt.params.field.mlp.params();
  auto& cw = ckpt.params.color.mlp.params();
  const std::size_t body = std::size_t(bytes.end() - eol - 1);
  if (body != 4 * std::size_t(fw.size() + cw.size())) {
    throw Error(Errc::BadCheckpoint, "parameter blob has the wrong size");
  }
  const auto values = decode_f32_le(bytes.subspan(bytes.size() - body));
  std::copy(values.begin(), values.begin() + fw.size(), fw.data());
  std::copy(values.begin() + fw.size(), values.end(), cw.data());
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_bytes(path, checkpoint_bytes(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = read_bytes(path);
  } catch (const Error& e) {
    throw Error(Errc::BadCheckpoint, e.what());
  }
  return parse_checkpoint(bytes);
}

}  // namespace xnaf
