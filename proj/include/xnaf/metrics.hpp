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

// Image-quality metrics.  Both operate on whatever values they are given;
// the evaluation path quantises to 8 bits first (see quantize_rgb8).

#pragma once

#include "xnaf/projector.hpp"

namespace xnaf {

/// 10 log10(max^2 / MSE) over all channels; +infinity when MSE is zero.
double psnr(const ProjectionImage& a, const ProjectionImage& b, double max_val = 1.0);

/// Mean local SSIM of the channel-mean grayscale images: 11x11 Gaussian
/// window (sigma 1.5), K1 = 0.01, K2 = 0.03, unit dynamic range, valid
/// windows only.
double ssim(const ProjectionImage& a, const ProjectionImage& b);

}  // namespace xnaf
