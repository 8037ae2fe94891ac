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

#include "xnaf/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "xnaf/error.hpp"

namespace xnaf {

namespace {

void check_same_shape(const ProjectionImage& a, const ProjectionImage& b) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw Error(Errc::DimMismatch, "images differ in size or channel count");
  }
}

std::vector<double> grayscale(const ProjectionImage& img) {
  std::vector<double> out(std::size_t(img.width) * img.height, 0.0);
  for (std::size_t p = 0; p < out.size(); ++p) {
    double sum = 0.0;
    for (int c = 0; c < img.channels; ++c) sum += img.pixels[p * img.channels + c];
    out[p] = sum / img.channels;
  }
  return out;
}

constexpr int kWindow = 11;

std::array<double, kWindow> gaussian_window() {
  std::array<double, kWindow> w{};
  double sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double x = i - kWindow / 2;
    w[i] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
    sum += w[i];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable "valid" filter: output is (w - 10) x (h - 10).
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h) {
  static const auto k = gaussian_window();
  const int ow = w - kWindow + 1, oh = h - kWindow + 1;
  std::vector<double> rows(std::size_t(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * img[std::size_t(y) * w + x + i];
      rows[std::size_t(y) * ow + x] = s;
    }
  std::vector<double> out(std::size_t(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < kWindow; ++i) s += k[i] * rows[std::size_t(y + i) * ow + x];
      out[std::size_t(y) * ow + x] = s;
    }
  return out;
}

}  // namespace

double psnr(const ProjectionImage& a, const ProjectionImage& b, double max_val) {
  check_same_shape(a, b);
  if (a.pixels.empty()) throw Error(Errc::InvalidArgument, "empty image");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    sum += d * d;
  }
  const double mse = sum / double(a.pixels.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

double ssim(const ProjectionImage& a, const ProjectionImage& b) {
  check_same_shape(a, b);
  if (a.width < kWindow || a.height < kWindow) {
    throw Error(Errc::InvalidArgument, "SSIM needs images of at least 11x11 pixels");
  }
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const int w = a.width, h = a.height;
  const auto x = grayscale(a);
  const auto y = grayscale(b);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mx = filter_valid(x, w, h);
  const auto my = filter_valid(y, w, h);
  const auto sxx = filter_valid(xx, w, h);
  const auto syy = filter_valid(yy, w, h);
  const auto sxy = filter_valid(xy, w, h);
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    total += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return total / double(mx.size());
}

}  // namespace xnaf
