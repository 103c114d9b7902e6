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


#ifndef HSC_IMAGE_H_
#define HSC_IMAGE_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsc/tensor.h"

namespace hsc {

// Planar RGB in [0, 1]: pixels[(c * height + y) * width + x].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int w, int h, float fill = 0.0f)
      : width(w), height(h), pixels(static_cast<size_t>(3) * w * h, fill) {}

  float& at(int c, int y, int x) {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }
  float at(int c, int y, int x) const {
    return pixels[(static_cast<size_t>(c) * height + y) * width + x];
  }
  int64_t pixel_count() const { return static_cast<int64_t>(width) * height; }
};

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major
};

// [0, 1] -> 0..255 with round-half-to-even, clamped.
uint8_t ToByte(float v);

// Binary P6 / P5 with maxval 255. Comments in the header are skipped.
Image DecodePpm(std::span<const uint8_t> bytes);
std::vector<uint8_t> EncodePpm(const Image& img);
Image ReadPpm(const std::string& path);
void WritePpm(const std::string& path, const Image& img);

GrayImage DecodePgm(std::span<const uint8_t> bytes);
std::vector<uint8_t> EncodePgm(const GrayImage& img);
GrayImage ReadPgm(const std::string& path);
void WritePgm(const std::string& path, const GrayImage& img);

// Mirror-pads right and bottom so both sides are multiples of `multiple`.
Image ReflectPad(const Image& img, int multiple);
Image Crop(const Image& img, int width, int height);

// Rounds every pixel through the 8-bit grid.
Image Quantize8(const Image& img);

// Stacks equally sized images into N x 3 x H x W.
template <typename T>
Tensor<T> ImagesToTensor(std::span<const Image* const> images);
template <typename T>
Image TensorToImage(const Tensor<T>& batch, int index);

}  // namespace hsc

#endif  // HSC_IMAGE_H_
