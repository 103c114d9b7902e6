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


#include "hsc/corpus.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "hsc/error.h"

namespace hsc {
namespace {

struct Rgb {
  float r, g, b;
};

Rgb RandomColor(Rng& rng) {
  return {static_cast<float>(rng.Uniform(0.05, 0.95)), static_cast<float>(rng.Uniform(0.05, 0.95)),
          static_cast<float>(rng.Uniform(0.05, 0.95))};
}

void Put(Image& img, int x, int y, Rgb c) {
  img.at(0, y, x) = c.r;
  img.at(1, y, x) = c.g;
  img.at(2, y, x) = c.b;
}

Rgb Mix(Rgb a, Rgb b, double t) {
  const float u = static_cast<float>(t);
  return {a.r + (b.r - a.r) * u, a.g + (b.g - a.g) * u, a.b + (b.b - a.b) * u};
}

void AddNoise(Image& img, double sigma, Rng& rng) {
  for (float& v : img.pixels) {
    v = std::clamp(v + static_cast<float>(sigma * rng.Normal()), 0.0f, 1.0f);
  }
}

Image Gradient(int w, int h, Rng& rng) {
  const Rgb a = RandomColor(rng), b = RandomColor(rng);
  const double angle = rng.Uniform(0, 2 * M_PI);
  const double dx = std::cos(angle), dy = std::sin(angle);
  const double span = std::abs(dx) * (w - 1) + std::abs(dy) * (h - 1) + 1e-9;
  const double base = std::min(0.0, dx * (w - 1)) + std::min(0.0, dy * (h - 1));
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) Put(img, x, y, Mix(a, b, (dx * x + dy * y - base) / span));
  }
  return img;
}

Image Checker(int w, int h, Rng& rng) {
  const Rgb a = RandomColor(rng), b = RandomColor(rng);
  const int period = rng.IntIn(6, 16);
  const int ox = rng.IntIn(0, period - 1), oy = rng.IntIn(0, period - 1);
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Put(img, x, y, (((x + ox) / period + (y + oy) / period) % 2) ? a : b);
    }
  }
  return img;
}

Image Stripes(int w, int h, Rng& rng) {
  const Rgb a = RandomColor(rng), b = RandomColor(rng);
  const double angle = rng.Uniform(0, M_PI);
  const double freq = rng.Uniform(0.1, 0.45);
  const double phase = rng.Uniform(0, 2 * M_PI);
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double t = freq * (std::cos(angle) * x + std::sin(angle) * y) + phase;
      Put(img, x, y, Mix(a, b, 0.5 + 0.5 * std::sin(t)));
    }
  }
  return img;
}

// Many small Gaussian blobs, dense enough to look stationary.
Image Blobs(int w, int h, Rng& rng) {
  const Rgb base = RandomColor(rng);
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) Put(img, x, y, base);
  }
  const int count = std::max(4, w * h / 160);
  for (int i = 0; i < count; ++i) {
    const Rgb c = RandomColor(rng);
    const double cx = rng.Uniform(-4, w + 4), cy = rng.Uniform(-4, h + 4);
    const double r = rng.Uniform(2.5, 6.0);
    const int x0 = std::max(0, static_cast<int>(cx - 3 * r));
    const int x1 = std::min(w - 1, static_cast<int>(cx + 3 * r));
    const int y0 = std::max(0, static_cast<int>(cy - 3 * r));
    const int y1 = std::min(h - 1, static_cast<int>(cy + 3 * r));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        const double t = 0.8 * std::exp(-d2 / (2 * r * r));
        Rgb cur{img.at(0, y, x), img.at(1, y, x), img.at(2, y, x)};
        Put(img, x, y, Mix(cur, c, t));
      }
    }
  }
  return img;
}

// Value noise on a coarse lattice, bilinearly interpolated.
Image SmoothNoise(int w, int h, Rng& rng) {
  const Rgb a = RandomColor(rng), b = RandomColor(rng);
  const int cell = rng.IntIn(6, 16);
  const int gw = w / cell + 2, gh = h / cell + 2;
  std::vector<double> lattice(static_cast<size_t>(gw) * gh);
  for (double& v : lattice) v = rng.Uniform();
  Image img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / cell, fy = static_cast<double>(y) / cell;
      const int ix = static_cast<int>(fx), iy = static_cast<int>(fy);
      const double tx = fx - ix, ty = fy - iy;
      auto L = [&](int i, int j) { return lattice[static_cast<size_t>(j) * gw + i]; };
      const double v = (1 - ty) * ((1 - tx) * L(ix, iy) + tx * L(ix + 1, iy)) +
                       ty * ((1 - tx) * L(ix, iy + 1) + tx * L(ix + 1, iy + 1));
      Put(img, x, y, Mix(a, b, v));
    }
  }
  return img;
}

}  // namespace

Image StationaryTexture(int width, int height, Rng& rng) {
  Image img;
  switch (rng.IntIn(0, 3)) {
    case 0: img = Checker(width, height, rng); break;
    case 1: img = Stripes(width, height, rng); break;
    case 2: img = Blobs(width, height, rng); break;
    default: img = SmoothNoise(width, height, rng); break;
  }
  AddNoise(img, 0.02, rng);
  return img;
}

CorpusImage SyntheticImage(int size, Rng& rng) {
  CorpusImage out;
  out.image = rng.Uniform() < 0.4 ? Gradient(size, size, rng) : StationaryTexture(size, size, rng);
  out.saliency = GrayImage{size, size, std::vector<uint8_t>(static_cast<size_t>(size) * size, 0)};
  const int shapes = rng.IntIn(1, 2);
  for (int s = 0; s < shapes; ++s) {
    const Image fill = StationaryTexture(size, size, rng);
    const int side = rng.IntIn(size / 5, size * 2 / 5);
    const int x0 = rng.IntIn(0, size - side), y0 = rng.IntIn(0, size - side);
    const bool ellipse = rng.Uniform() < 0.5;
    const double c = (side - 1) / 2.0;
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        if (ellipse && (x - c) * (x - c) + (y - c) * (y - c) > (c + 0.5) * (c + 0.5)) continue;
        const int px = x0 + x, py = y0 + y;
        for (int ch = 0; ch < 3; ++ch) out.image.at(ch, py, px) = fill.at(ch, py, px);
        out.saliency.pixels[static_cast<size_t>(py) * size + px] = 255;
      }
    }
  }
  return out;
}

CorpusImage SplitTextureImage(int size, Rng& rng) {
  CorpusImage out;
  out.image = StationaryTexture(size, size, rng);
  out.saliency = GrayImage{size, size, std::vector<uint8_t>(static_cast<size_t>(size) * size, 0)};
  const int side = rng.IntIn(0, 3);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const bool on = side == 0 ? x < size / 2 : side == 1 ? x >= size / 2
                    : side == 2 ? y < size / 2 : y >= size / 2;
      if (on) out.saliency.pixels[static_cast<size_t>(y) * size + x] = 255;
    }
  }
  return out;
}

std::vector<CorpusImage> GenerateCorpus(int count, int size, uint64_t seed) {
  Check(count >= 0 && size >= 8, ErrorKind::kUsage, "corpus: bad count or size");
  Rng rng(seed);
  std::vector<CorpusImage> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    Rng item = rng.Fork(static_cast<uint64_t>(i));
    out.push_back(SyntheticImage(size, item));
    // Store exactly what the 8-bit files will hold.
    out.back().image = Quantize8(out.back().image);
  }
  return out;
}

void WriteCorpus(const std::string& dir, const std::vector<CorpusImage>& corpus) {
  std::filesystem::create_directories(dir);
  for (size_t i = 0; i < corpus.size(); ++i) {
    char stem[32];
    std::snprintf(stem, sizeof(stem), "img_%04zu", i);
    WritePpm(dir + "/" + stem + ".ppm", corpus[i].image);
    WritePgm(dir + "/" + stem + ".pgm", corpus[i].saliency);
  }
}

std::vector<CorpusImage> LoadCorpus(const std::string& dir) {
  namespace fs = std::filesystem;
  Check(fs::is_directory(dir), ErrorKind::kIo, "corpus directory not found: " + dir);
  std::vector<fs::path> ppms;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".ppm") ppms.push_back(e.path());
  }
  std::sort(ppms.begin(), ppms.end());
  std::vector<CorpusImage> out;
  for (const fs::path& p : ppms) {
    CorpusImage ci;
    ci.image = ReadPpm(p.string());
    fs::path pgm = p;
    pgm.replace_extension(".pgm");
    if (fs::exists(pgm)) {
      ci.saliency = ReadPgm(pgm.string());
      Check(ci.saliency.width == ci.image.width && ci.saliency.height == ci.image.height,
            ErrorKind::kFormat, "saliency map size differs from " + p.string());
    }
    out.push_back(std::move(ci));
  }
  return out;
}

}  // namespace hsc
