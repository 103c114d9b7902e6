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


#ifndef HSC_CORPUS_H_
#define HSC_CORPUS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "hsc/image.h"
#include "hsc/rng.h"

namespace hsc {

// A synthetic image and its exact saliency (255 inside pasted shapes).
struct CorpusImage {
  Image image;
  GrayImage saliency;
};

// Stationary texture filling the whole frame: checkers, stripes, blobs or
// band-limited noise.
Image StationaryTexture(int width, int height, Rng& rng);

// Background (gradient or texture) with one or two pasted textured shapes;
// the shapes are the salient region.
CorpusImage SyntheticImage(int size, Rng& rng);

// One stationary texture over the whole frame, with one half (chosen at
// random among left/right/top/bottom) marked salient.
CorpusImage SplitTextureImage(int size, Rng& rng);

std::vector<CorpusImage> GenerateCorpus(int count, int size, uint64_t seed);

// img_NNNN.ppm + img_NNNN.pgm per image.
void WriteCorpus(const std::string& dir, const std::vector<CorpusImage>& corpus);
// Loads every .ppm in name order, with its .pgm when present (otherwise an
// empty saliency map).
std::vector<CorpusImage> LoadCorpus(const std::string& dir);

}  // namespace hsc

#endif  // HSC_CORPUS_H_
