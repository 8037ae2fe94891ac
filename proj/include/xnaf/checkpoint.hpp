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

// Trained-model persistence.  A checkpoint file is one line of compact JSON
// (architecture, cameras, scene bounds, iteration) followed by every network
// parameter as little-endian float32: field weights first, then colour.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "xnaf/trainer.hpp"

namespace xnaf {

struct Checkpoint {
  ParamSet<float> params;
  Aabb bounds;
  RenderConfig render;
  int iteration = 0;
};

std::vector<std::uint8_t> checkpoint_bytes(const Checkpoint& ckpt);
/// Throws BadCheckpoint on any malformed or truncated input.
Checkpoint parse_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace xnaf
