// Copyright 2026 The HSC Authors. All Rights Reserved.
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


#include "hsc/image.h"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "hsc/bytes.h"
#include "hsc/error.h"

namespace hsc {
namespace {

struct PnmHeader {
  int width = 0;
  int height = 0;
  size_t data_offset = 0;
};

PnmHeader ParsePnmHeader(std::span<const uint8_t> b, char kind) {
  Check(b.size() >= 2 && b[0] == 'P' && b[1] == static_cast<uint8_t>(kind),
        ErrorKind::kFormat, std::string("not a binary P") + kind + " file");
  size_t pos = 2;
  auto next_int = [&]() {
    while (pos < b.size()) {
      if (b[pos] == '#') {
        while (pos < b.size() && b[pos] != '\n') ++pos;
      } else if (std::isspace(b[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    Check(pos < b.size() && std::isdigit(b[pos]), ErrorKind::kFormat,
          "malformed PNM header");
    long v = 0;
    while (pos < b.size() && std::isdigit(b[pos])) {
      v = v * 10 + (b[pos] - '0');
      Check(v < (1 << 24), ErrorKind::kFormat, "PNM dimension too large");
      ++pos;
    }
    return static_cast<int>(v);
  };
  PnmHeader h;
  h.width = next_int();
  h.height = next_int();
  const int maxval = next_int();
  Check(maxval == 255, ErrorKind::kFormat, "only 8-bit PNM (maxval 255) supported");
  Check(h.width > 0 && h.height > 0, ErrorKind::kFormat, "empty PNM image");
  Check(pos < b.size() && std::isspace(b[pos]), ErrorKind::kFormat,
        "malformed PNM header");
  h.data_offset = pos + 1;
  return h;
}

int Reflect(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

uint8_t ToByte(float v) {
  const float scaled = std::nearbyint(std::clamp(v, 0.0f, 1.0f) * 255.0f);
  return static_cast<uint8_t>(scaled);
}

Image DecodePpm(std::span<const uint8_t> bytes) {
  const PnmHeader h = ParsePnmHeader(bytes, '6');
  const size_t n = static_cast<size_t>(h.width) * h.height;
  Check(bytes.size() >= h.data_offset + 3 * n, ErrorKind::kFormat,
        "truncated PPM payload");
  Image img(h.width, h.height);
  const uint8_t* p = bytes.data() + h.data_offset;
  for (int y = 0; y < h.height; ++y) {
    for (int x = 0; x < h.width; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = *p++ / 255.0f;
    }
  }
  return img;
}

std::vector<uint8_t> EncodePpm(const Image& img) {
  ByteWriter w;
  w.Str("P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
        "\n255\n");
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) w.U8(ToByte(img.at(c, y, x)));
    }
  }
  return w.Take();
}

Image ReadPpm(const std::string& path) { return DecodePpm(ReadFileBytes(path)); }

void WritePpm(const std::string& path, const Image& img) {
  WriteFileBytes(path, EncodePpm(img));
}

GrayImage DecodePgm(std::span<const uint8_t> bytes) {
  const PnmHeader h = ParsePnmHeader(bytes, '5');
  const size_t n = static_cast<size_t>(h.width) * h.height;
  Check(bytes.size() >= h.data_offset + n, ErrorKind::kFormat,
        "truncated PGM payload");
  GrayImage g{h.width, h.height, {}};
  g.pixels.assign(bytes.begin() + h.data_offset, bytes.begin() + h.data_offset + n);
  return g;
}

std::vector<uint8_t> EncodePgm(const GrayImage& img) {
  ByteWriter w;
  w.Str("P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
        "\n255\n");
  w.Raw(img.pixels);
  return w.Take();
}

GrayImage ReadPgm(const std::string& path) { return DecodePgm(ReadFileBytes(path)); }

void WritePgm(const std::string& path, const GrayImage& img) {
  WriteFileBytes(path, EncodePgm(img));
}

Image ReflectPad(const Image& img, int multiple) {
  Check(multiple >= 1, ErrorKind::kUsage, "pad multiple must be positive");
  const int w = (img.width + multiple - 1) / multiple * multiple;
  const int h = (img.height + multiple - 1) / multiple * multiple;
  Image out(w, h);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      const int sy = Reflect(y, img.height);
      for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, sy, Reflect(x, img.width));
    }
  }
  return out;
}

Image Crop(const Image& img, int width, int height) {
  Check(width <= img.width && height <= img.height, ErrorKind::kShape,
        "crop larger than image");
  Image out(width, height);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) out.at(c, y, x) = img.at(c, y, x);
    }
  }
  return out;
}

Image Quantize8(const Image& img) {
  Image out = img;
  for (float& v : out.pixels) v = ToByte(v) / 255.0f;
  return out;
}

template <typename T>
Tensor<T> ImagesToTensor(std::span<const Image* const> images) {
  Check(!images.empty(), ErrorKind::kShape, "no images to stack");
  const int w = images[0]->width, h = images[0]->height;
  std::vector<T> v;
  v.reserve(images.size() * 3 * static_cast<size_t>(w) * h);
  for (const Image* img : images) {
    Check(img->width == w && img->height == h, ErrorKind::kShape,
          "images in a batch must share dimensions");
    v.insert(v.end(), img->pixels.begin(), img->pixels.end());
  }
  return Tensor<T>({static_cast<int64_t>(images.size()), 3, h, w}, std::move(v));
}

template <typename T>
Image TensorToImage(const Tensor<T>& batch, int index) {
  Check(batch.rank() == 4 && batch.dim(1) == 3, ErrorKind::kShape,
        "expected N x 3 x H x W");
  Image img(static_cast<int>(batch.dim(3)), static_cast<int>(batch.dim(2)));
  const size_t n = img.pixels.size();
  auto v = batch.values();
  for (size_t i = 0; i < n; ++i) {
    img.pixels[i] = static_cast<float>(v[index * n + i]);
  }
  return img;
}

template Tensor<float> ImagesToTensor<float>(std::span<const Image* const>);
template Tensor<double> ImagesToTensor<double>(std::span<const Image* const>);
template Image TensorToImage<float>(const Tensor<float>&, int);
template Image TensorToImage<double>(const Tensor<double>&, int);

}  // namespace hsc
