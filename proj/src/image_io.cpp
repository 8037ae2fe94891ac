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

#include "xnaf/image_io.hpp"

#include <png.h>

#include <cstring>

#include "xnaf/error.hpp"

namespace xnaf {

void write_png(const std::filesystem::path& path, const Rgb8Image& image) {
  if (image.pixels.size() != std::size_t(image.width) * image.height * 3) {
    throw Error(Errc::DimMismatch, "RGB buffer does not match image size");
  }
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = png_uint_32(image.width);
  png.height = png_uint_32(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw Error(Errc::Io, "png write failed for " + path.string() + ": " + png.message);
  }
}

Rgb8Image read_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw Error(Errc::Io, "png read failed for " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Rgb8Image out;
  out.width = int(png.width);
  out.height = int(png.height);
  out.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw Error(Errc::Io, "png decode failed for " + path.string() + ": " + png.message);
  }
  return out;
}

}  // namespace xnaf
