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

#include "hsc/checkpoint.h"

#include "hsc/bytes.h"

namespace hsc {
namespace {
constexpr char kMagic[] = "HSC1";
constexpr char kMetaMagic[] = "META";
}  // namespace

const NamedArray* Checkpoint::Find(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::vector<uint8_t> SerializeCheckpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.Str(kMagic);
  w.U32(static_cast<uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    w.U32(static_cast<uint32_t>(a.name.size()));
    w.Str(a.name);
    w.U32(static_cast<uint32_t>(a.shape.size()));
    for (int64_t d : a.shape) w.U32(static_cast<uint32_t>(d));
    for (float v : a.values) w.F32(v);
  }
  if (!ckpt.metadata.empty()) {
    w.Str(kMetaMagic);
    w.U32(static_cast<uint32_t>(ckpt.metadata.size()));
    w.Str(ckpt.metadata);
  }
  return w.Take();
}

Checkpoint ParseCheckpoint(std::span<const uint8_t> bytes) {
  ByteReader r(bytes);
  Check(r.remaining() >= 4 && r.Str(4) == kMagic, ErrorKind::kFormat,
        "not a parameter checkpoint (bad magic)");
  Checkpoint ckpt;
  const uint32_t count = r.U32();
  for (uint32_t i = 0; i < count; ++i) {
    NamedArray a;
    a.name = r.Str(r.U32());
    const uint32_t rank = r.U32();
    Check(rank <= 8, ErrorKind::kFormat, "checkpoint: implausible rank");
    for (uint32_t d = 0; d < rank; ++d) a.shape.push_back(r.U32());
    const int64_t n = NumElements(a.shape);
    Check(static_cast<uint64_t>(n) * 4 <= r.remaining(), ErrorKind::kFormat,
          "checkpoint: truncated payload for " + a.name);
    a.values.resize(n);
    for (auto& v : a.values) v = r.F32();
    ckpt.arrays.push_back(std::move(a));
  }
  if (r.remaining() > 0) {
    Check(r.remaining() >= 8 && r.Str(4) == kMetaMagic, ErrorKind::kFormat,
          "checkpoint: trailing bytes are not a metadata block");
    ckpt.metadata = r.Str(r.U32());
    Check(r.remaining() == 0, ErrorKind::kFormat,
          "checkpoint: trailing bytes after metadata");
  }
  return ckpt;
}

void SaveCheckpoint(const std::string& path, const Checkpoint& ckpt) {
  WriteFileBytes(path, SerializeCheckpoint(ckpt));
}

Checkpoint LoadCheckpoint(const std::string& path) {
  return ParseCheckpoint(ReadFileBytes(path));
}

template <typename T>
void AppendParameters(std::span<Parameter<T>* const> params, Checkpoint& ckpt) {
  for (const Parameter<T>* p : params) {
    NamedArray a;
    a.name = p->name;
    a.shape = p->value.shape();
    a.values.assign(p->value.values().begin(), p->value.values().end());
    ckpt.arrays.push_back(std::move(a));
  }
}

template <typename T>
void RestoreParameters(const Checkpoint& ckpt,
                       std::span<Parameter<T>* const> params) {
  for (Parameter<T>* p : params) {
    const NamedArray* a = ckpt.Find(p->name);
    Check(a != nullptr, ErrorKind::kFormat,
          "checkpoint lacks parameter " + p->name);
    Check(a->shape == p->value.shape(), ErrorKind::kFormat,
          "checkpoint shape mismatch for " + p->name + ": " +
              ShapeString(a->shape) + " vs " + ShapeString(p->value.shape()));
    auto v = p->value.mutable_values();
    for (size_t i = 0; i < v.size(); ++i) v[i] = static_cast<T>(a->values[i]);
  }
}

template void AppendParameters<float>(std::span<Parameter<float>* const>,
                                      Checkpoint&);
template void AppendParameters<double>(std::span<Parameter<double>* const>,
                                       Checkpoint&);
template void RestoreParameters<float>(const Checkpoint&,
                                       std::span<Parameter<float>* const>);
template void RestoreParameters<double>(const Checkpoint&,
                                        std::span<Parameter<double>* const>);

}  // namespace hsc
