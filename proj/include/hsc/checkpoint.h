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

#ifndef HSC_CHECKPOINT_H_
#define HSC_CHECKPOINT_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsc/nn.h"

namespace hsc {

// Parameter checkpoint layout (all little-endian):
//   "HSC1", u32 count,
//   count x { u32 name_len, name, u32 rank, rank x u32 dim, f32 payload }
// optionally followed by a metadata trailer:
//   "META", u32 length, length bytes of key=value text.
struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

struct Checkpoint {
  std::vector<NamedArray> arrays;
  std::string metadata;

  const NamedArray* Find(const std::string& name) const;
};

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint ParseCheckpoint(std::span<const uint8_t> bytes);
void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint LoadCheckpoint(const std::string& path);

template <typename T>
void AppendParameters(std::span<Parameter<T>* const> params, Checkpoint& ckpt);

// Copies values into matching parameters by name. Missing names and shape
// mismatches throw kFormat.
template <typename T>
void RestoreParameters(const Checkpoint& ckpt,
                       std::span<Parameter<T>* const> params);

}  // namespace hsc

#endif  // HSC_CHECKPOINT_H_
