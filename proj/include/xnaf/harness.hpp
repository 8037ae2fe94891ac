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

// Rendering, export and evaluation on top of a trained checkpoint.

#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xnaf/checkpoint.hpp"
#include "xnaf/phantom.hpp"
#include "xnaf/projector.hpp"

namespace xnaf {

/// Same camera on a detector of a different size: f and cx follow the
/// width, s the height.
LpbCamera resize_camera(const LpbCamera& cam, int width, int height);

/// 8-bit RGB PNG round trip for three-channel images.
void save_image_png(const ProjectionImage& image, const std::filesystem::path& path);
ProjectionImage load_image_png(const std::filesystem::path& path);

/// Full-frame deterministic render (midpoint samples) of one camera.
ProjectionImage render_view(const FieldNet<float>& field, const ColorNet<float>& color,
                            const RenderConfig& cfg, const LpbCamera& cam, const Aabb& bounds);

/// width/height <= 0 keep each camera's own detector size.
std::vector<ProjectionImage> render_novel_views(const Checkpoint& ckpt,
                                                std::span<const LpbCamera> cameras,
                                                int width = 0, int height = 0);

/// Field values at voxel centres over the checkpoint bounds.
VoxelGrid export_voxels(const Checkpoint& ckpt, std::array<int, 3> dims);

struct ViewMetrics {
  int view = 0;
  double psnr = 0.0;
  double ssim = 0.0;
};

struct MetricsReport {
  std::vector<ViewMetrics> per_view;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  std::optional<PoseError> pose;  // means over views
};

/// Both image sets are quantised to 8 bits before comparison.
MetricsReport evaluate_images(std::span<const ProjectionImage> rendered,
                              std::span<const ProjectionImage> reference);
/// Mean pose error after rigid alignment of `est` onto `gt`.
PoseError mean_aligned_pose_error(std::span<const LpbCamera> est, std::span<const LpbCamera> gt);

nlohmann::json metrics_to_json(const MetricsReport& report);
std::string metrics_csv(const MetricsReport& report);

}  // namespace xnaf
