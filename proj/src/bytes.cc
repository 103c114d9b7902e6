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

#include "hsc/bytes.h"

#include <fstream>
#include <iterator>

namespace hsc {

std::vector<uint8_t> ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  Check(in.good(), ErrorKind::kIo, "cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  Check(!in.bad(), ErrorKind::kIo, "read failed for " + path);
  return bytes;
}

void WriteFileBytes(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  Check(out.good(), ErrorKind::kIo, "cannot create " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  Check(out.good(), ErrorKind::kIo, "write failed for " + path);
}

uint32_t Fnv1a32(std::span<const uint8_t> data) {
  uint32_t h = 0x811C9DC5u;
  for (uint8_t b : data) {
    h ^= b;
    h *= 0x01000193u;
  }
  return h;
}

uint64_t Fnv1a64(std::span<const uint8_t> data) {
  uint64_t h = 0xCBF29CE484222325ull;
  for (uint8_t b : data) {
    h ^= b;
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace hsc
