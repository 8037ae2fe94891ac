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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <ostream>

#include "xnaf/checkpoint.hpp"
#include "xnaf/harness.hpp"
#include "xnaf/io.hpp"
#include "xnaf/labeler.hpp"
#include "xnaf/phantom.hpp"
#include "xnaf/projector.hpp"
#include "xnaf/rng.hpp"
#include "xnaf/trainer.hpp"

namespace fs = std::filesystem;

namespace xnaf {

namespace {

std::string view_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "view_%03zu", k);
  return buf;
}

nlohmann::json cameras_to_json(std::span<const LpbCamera> cams) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& c : cams) list.push_back(camera_to_json(c));
  return {{"cameras", list}};
}

std::vector<LpbCamera> cameras_from_json(const nlohmann::json& j) {
  const auto& list = j.is_array() ? j : j.at("cameras");
  std::vector<LpbCamera> out;
  for (const auto& c : list) out.push_back(camera_from_json(c));
  return out;
}

struct RigOptions {
  int views = 9;
  double spacing = 40.0;
  double start = 0.0;
  double distance = 2.5;
  int width = 128;
  int height = 128;

  void add(CLI::App* app, bool with_size = true) {
    app->add_option("--views", views, "Number of views in the fan")->capture_default_str();
    app->add_option("--spacing", spacing, "Angle between neighbouring views (deg)")->capture_default_str();
    app->add_option("--start", start, "Angle of the first view (deg)")->capture_default_str();
    app->add_option("--source-distance", distance, "Source to conveyor axis distance")->capture_default_str();
    if (with_size) {
      app->add_option("--width", width, "Detector pixels")->capture_default_str();
      app->add_option("--height", height, "Scan lines")->capture_default_str();
    }
  }

  RigConfig config(const Aabb& bounds) const {
    RigConfig rig;
    rig.views = views;
    rig.spacing_deg = spacing;
    rig.start_deg = start;
    rig.source_distance = distance;
    rig.width = width;
    rig.height = height;
    rig.bounds = bounds;
    return rig;
  }
};

std::vector<fs::path> png_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::Io, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Neural attenuation fields for multi-view X-ray baggage scans", "xnaf"};
  app.require_subcommand(1);

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Generate a random multi-material scene");
  std::uint64_t ph_seed = 0;
  int ph_objects = 3;
  fs::path ph_out;
  phantom->add_option("--seed", ph_seed, "Scene seed")->required();
  phantom->add_option("--objects", ph_objects, "Number of primitives")->capture_default_str();
  phantom->add_option("--out", ph_out, "Scene JSON path")->required();

  // synthesize
  auto* synth = app.add_subcommand("synthesize", "Render a multi-view dataset from a scene");
  fs::path sy_scene, sy_out;
  std::uint64_t sy_seed = 0;
  double sy_noise = 0.0, sy_step = 0.0;
  int sy_voxels = 128;
  bool sy_trans = false;
  RigOptions sy_rig;
  synth->add_option("--scene", sy_scene, "Scene JSON")->required();
  synth->add_option("--out", sy_out, "Output dataset directory")->required();
  synth->add_option("--seed", sy_seed, "Noise seed")->required();
  synth->add_option("--noise", sy_noise, "Gaussian RGB noise sigma")->capture_default_str();
  synth->add_option("--step", sy_step, "Ray-march step (0: half a voxel)")->capture_default_str();
  synth->add_option("--voxels", sy_voxels, "Voxelisation resolution per axis")->capture_default_str();
  synth->add_flag("--transmittance", sy_trans, "Also store per-view transmittance");
  sy_rig.add(synth);

  // train
  auto* trainc = app.add_subcommand("train", "Fit the field, colour net and cameras to a dataset");
  fs::path tr_data, tr_out, tr_config;
  std::uint64_t tr_seed = 0;
  int tr_iters = -1, tr_ckpt_every = 0;
  double tr_rot = 0.0, tr_trans = 0.0;
  trainc->add_option("--data", tr_data, "Dataset directory")->required();
  trainc->add_option("--out", tr_out, "Output directory")->required();
  trainc->add_option("--seed", tr_seed, "Training seed")->required();
  trainc->add_option("--config", tr_config, "Training configuration (JSON)");
  trainc->add_option("--iterations", tr_iters, "Override the configured iteration count");
  trainc->add_option("--checkpoint-every", tr_ckpt_every, "Intermediate checkpoint period (0: final only)");
  trainc->add_option("--perturb-rot", tr_rot, "Initial pose rotation noise (deg)");
  trainc->add_option("--perturb-trans", tr_trans, "Initial pose translation noise (fraction of diagonal)");

  // render
  auto* render = app.add_subcommand("render", "Render views from a checkpoint");
  fs::path re_ckpt, re_out, re_cams;
  int re_width = 0, re_height = 0;
  RigOptions re_rig;
  auto* re_use_rig = render->add_flag("--rig", "Render a fan rig instead of the trained cameras");
  render->add_option("--checkpoint", re_ckpt, "Checkpoint file")->required();
  render->add_option("--out", re_out, "Output directory")->required();
  render->add_option("--cameras", re_cams, "Camera list (JSON)")->excludes(re_use_rig);
  render->add_option("--width", re_width, "Output width (default: camera's own)");
  render->add_option("--height", re_height, "Output height (default: camera's own)");
  re_rig.add(render, false);

  // eval
  auto* evalc = app.add_subcommand("eval", "Compare rendered images with references");
  fs::path ev_rendered, ev_reference, ev_out, ev_csv, ev_ckpt, ev_gt;
  evalc->add_option("--rendered", ev_rendered, "Directory of rendered PNGs")->required();
  evalc->add_option("--reference", ev_reference, "Directory of reference PNGs")->required();
  evalc->add_option("--out", ev_out, "Metrics JSON path")->required();
  evalc->add_option("--csv", ev_csv, "Metrics CSV path (default: next to the JSON)");
  auto* ev_ckpt_opt = evalc->add_option("--checkpoint", ev_ckpt, "Checkpoint with refined cameras");
  evalc->add_option("--gt-data", ev_gt, "Dataset holding ground-truth cameras")->needs(ev_ckpt_opt);

  // label
  auto* label = app.add_subcommand("label", "Cuboid labels from 2D boxes and a trained field");
  fs::path la_ckpt, la_data, la_out;
  int la_dims = 64;
  double la_tau = -1.0;
  label->add_option("--checkpoint", la_ckpt, "Checkpoint file")->required();
  label->add_option("--data", la_data, "Dataset with per-view boxes")->required();
  label->add_option("--out", la_out, "Output directory")->required();
  label->add_option("--dims", la_dims, "Grid resolution per axis")->capture_default_str();
  label->add_option("--tau", la_tau, "Density threshold (default: half the 99th percentile)");

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every gradient");
  std::uint64_t gc_seed = 1;
  double gc_h = 1e-4, gc_tol = 1e-4;
  fs::path gc_out;
  grad->add_option("--seed", gc_seed, "Problem seed")->capture_default_str();
  grad->add_option("--step", gc_h, "Central-difference step")->capture_default_str();
  grad->add_option("--tol", gc_tol, "Relative error tolerance")->capture_default_str();
  grad->add_option("--out", gc_out, "Report JSON path");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*phantom) {
      if (ph_objects < 1) throw Error(Errc::InvalidArgument, "--objects must be positive");
      write_json(ph_out, scene_to_json(make_phantom(ph_seed, ph_objects)));
      out << "wrote " << ph_out.string() << '\n';
    } else if (*synth) {
      const SpectralScene scene = scene_from_json(read_json(sy_scene));
      const auto cams = make_fan_rig(sy_rig.config(scene.bounds));
      SynthesisOptions opt;
      opt.seed = sy_seed;
      opt.noise_sigma = sy_noise;
      opt.step = sy_step;
      opt.voxel_dims = {sy_voxels, sy_voxels, sy_voxels};
      std::vector<ProjectionImage> trans;
      const Dataset ds = synthesize_dataset(scene, cams, opt, sy_trans ? &trans : nullptr);
      save_dataset(ds, sy_out, trans);
      out << "wrote " << ds.images.size() << " views to " << sy_out.string() << '\n';
    } else if (*trainc) {
      const Dataset ds = load_dataset(tr_data);
      TrainConfig cfg = tr_config.empty() ? TrainConfig{} : train_config_from_json(read_json(tr_config));
      cfg.seed = tr_seed;
      if (tr_iters >= 0) cfg.iterations = tr_iters;
      // Intermediate checkpoints are written from the log callback.
      if (tr_ckpt_every > 0) {
        cfg.log_every = cfg.log_every > 0 ? std::gcd(cfg.log_every, tr_ckpt_every) : tr_ckpt_every;
      }
      std::vector<LpbCamera> gt;
      for (const auto& img : ds.images) gt.push_back(img.camera);
      std::vector<LpbCamera> init = gt;
      if (tr_rot > 0.0 || tr_trans > 0.0) {
        for (std::size_t k = 0; k < init.size(); ++k) {
          init[k] = perturb_pose(gt[k], tr_rot, tr_trans, hash_seed(tr_seed, 0x70657274ULL, k),
                                 ds.bounds.diagonal());
        }
      }
      fs::create_directories(tr_out);
      write_json(tr_out / "config.json", train_config_to_json(cfg));
      write_json(tr_out / "cameras_init.json", cameras_to_json(init));
      auto on_log = [&](const HistoryRow& row, const ParamSet<float>& p) {
        out << "iter " << row.iteration << "  loss " << row.loss << "  psnr " << row.psnr << '\n';
        if (tr_ckpt_every > 0 && row.iteration % tr_ckpt_every == 0 && row.iteration < cfg.iterations) {
          char name[48];
          std::snprintf(name, sizeof name, "checkpoint_%06d.bin", row.iteration);
          save_checkpoint({p, ds.bounds, cfg.render, row.iteration}, tr_out / name);
        }
      };
      const TrainResult res = train(ds, init, cfg, gt, on_log);
      save_checkpoint({res.params, ds.bounds, cfg.render, cfg.iterations}, tr_out / "checkpoint.bin");
      write_text(tr_out / "history.csv", history_csv(res.history));
      write_json(tr_out / "cameras_refined.json", cameras_to_json(res.params.cameras()));
      out << "wrote " << (tr_out / "checkpoint.bin").string() << '\n';
    } else if (*render) {
      const Checkpoint ckpt = load_checkpoint(re_ckpt);
      std::vector<LpbCamera> cams;
      if (!re_cams.empty()) {
        cams = cameras_from_json(read_json(re_cams));
      } else if (*re_use_rig) {
        RigConfig rig = re_rig.config(ckpt.bounds);
        if (!ckpt.params.views.empty()) {
          rig.width = ckpt.params.views.front().width;
          rig.height = ckpt.params.views.front().height;
        }
        cams = make_fan_rig(rig);
      } else {
        cams = ckpt.params.cameras();
      }
      if ((re_width > 0) != (re_height > 0)) {
        throw Error(Errc::InvalidArgument, "--width and --height go together");
      }
      const auto images = render_novel_views(ckpt, cams, re_width, re_height);
      fs::create_directories(re_out);
      std::vector<LpbCamera> used;
      for (std::size_t k = 0; k < images.size(); ++k) {
        save_image_png(images[k], re_out / (view_name(k) + ".png"));
        used.push_back(images[k].camera);
      }
      write_json(re_out / "cameras.json", cameras_to_json(used));
      out << "wrote " << images.size() << " views to " << re_out.string() << '\n';
    } else if (*evalc) {
      const auto refs = png_files(ev_reference);
      if (refs.empty()) throw Error(Errc::InvalidArgument, "no reference PNGs");
      std::vector<ProjectionImage> a, b;
      for (std::size_t k = 0; k < refs.size(); ++k) {
        const fs::path mine = ev_rendered / refs[k].filename();
        if (!fs::exists(mine)) throw Error(Errc::DimMismatch, "missing rendered image " + mine.string());
        a.push_back(load_image_png(mine));
        b.push_back(load_image_png(refs[k]));
        a.back().view_id = b.back().view_id = int(k);
      }
      MetricsReport report = evaluate_images(a, b);
      if (!ev_ckpt.empty()) {
        const Checkpoint ckpt = load_checkpoint(ev_ckpt);
        const fs::path gt_dir = ev_gt.empty() ? ev_reference : ev_gt;
        const Dataset gt = load_dataset(gt_dir);
        std::vector<LpbCamera> gt_cams;
        for (const auto& img : gt.images) gt_cams.push_back(img.camera);
        report.pose = mean_aligned_pose_error(ckpt.params.cameras(), gt_cams);
      }
      write_json(ev_out, metrics_to_json(report));
      fs::path csv = ev_csv.empty() ? fs::path(ev_out).replace_extension(".csv") : ev_csv;
      write_text(csv, metrics_csv(report));
      out << "mean psnr " << report.mean_psnr << "  mean ssim " << report.mean_ssim << '\n';
    } else if (*label) {
      const Checkpoint ckpt = load_checkpoint(la_ckpt);
      const Dataset ds = load_dataset(la_data);
      const auto cams = ckpt.params.cameras();
      if (cams.size() != ds.images.size()) {
        throw Error(Errc::DimMismatch, "checkpoint and dataset have different view counts");
      }
      std::map<int, std::vector<Bbox2>> objects;
      for (const auto& img : ds.images)
        for (const auto& box : img.boxes) objects[box.object].push_back(box);
      const std::array<int, 3> dims{la_dims, la_dims, la_dims};
      const auto density = density_norm(export_voxels(ckpt, dims));
      fs::create_directories(la_out);
      nlohmann::json list = nlohmann::json::array();
      for (const auto& [id, boxes] : objects) {
        const OccupancyMask hull = visual_hull(dims, ckpt.bounds, cams, boxes);
        if (hull.count() == 0) {
          err << "warning: empty visual hull for object " << id << '\n';
          continue;
        }
        const double tau = la_tau >= 0.0 ? la_tau : default_tau(density, hull);
        const OccupancyMask mask = region_grow(density, hull, tau);
        Cuboid cub = cuboid_from_mask(mask);
        cub.cls = boxes.front().cls;
        nlohmann::json j = cuboid_to_json(cub);
        j["object"] = id;
        list.push_back(j);
        char name[32];
        std::snprintf(name, sizeof name, "mask_%03d", id);
        save_mask(mask, la_out / name);
      }
      write_json(la_out / "cuboids.json", list);
      out << "wrote " << list.size() << " cuboids to " << la_out.string() << '\n';
    } else if (*grad) {
      const GradCheckReport rep = run_gradient_check(gc_seed, gc_h, gc_tol);
      if (!gc_out.empty()) {
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& e : rep.entries) {
          entries.push_back({{"name", e.name}, {"analytic", e.analytic}, {"numeric", e.numeric},
                             {"rel_error", e.rel_error}});
        }
        write_json(gc_out, {{"max_rel_error", rep.max_rel_error}, {"passed", rep.passed},
                            {"entries", entries}});
      }
      out << "checked " << rep.entries.size() << " gradients, max relative error "
          << rep.max_rel_error << (rep.passed ? "  PASS" : "  FAIL") << '\n';
      return rep.passed ? 0 : 1;
    }
  } catch (const Error& e) {
    err << "error [" << errc_name(e.code()) << "]: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace xnaf
