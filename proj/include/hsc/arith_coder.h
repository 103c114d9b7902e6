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


#ifndef HSC_ARITH_CODER_H_
#define HSC_ARITH_CODER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "hsc/bytes.h"

namespace hsc {

// Frequency tables sum to exactly this.
inline constexpr uint32_t kFrequencyTotal = 1u << 16;

// Largest-remainder rounding of a PMF onto kFrequencyTotal counts, each
// symbol getting at least one. Ties in the remainder go to the lower index.
std::vector<uint32_t> QuantizeFrequencies(std::span<const double> pmf);

// -log2(freq[symbol] / total).
double SymbolCost(std::span<const uint32_t> freqs, int symbol);

struct CodedPayload {
  uint64_t symbol_count = 0;
  uint64_t declared_bits = 0;
  std::vector<uint8_t> bytes;  // ceil(declared_bits / 8), zero-padded
  uint32_t checksum = 0;       // FNV-1a of the symbols

  uint64_t SerializedBits() const;
};

// Layout: u64 symbol_count, u64 declared_bits, bytes, u32 checksum.
void WritePayload(const CodedPayload& payload, ByteWriter& out);
CodedPayload ReadPayload(ByteReader& in);

uint32_t SymbolChecksum(std::span<const int32_t> symbols);

// Binary arithmetic coder with 32-bit low/high registers and pending-bit
// carry handling.
class ArithmeticEncoder {
 public:
  void Encode(std::span<const uint32_t> freqs, int symbol);
  // Emits the two disambiguating bits and returns the stream.
  CodedPayload Finish(std::span<const int32_t> symbols);

 private:
  void EmitBit(int bit);
  void EmitWithPending(int bit);

  uint64_t low_ = 0;
  uint64_t high_ = 0xFFFFFFFFull;
  uint64_t pending_ = 0;
  uint64_t bits_ = 0;
  uint64_t count_ = 0;
  std::vector<uint8_t> bytes_;
};

class ArithmeticDecoder {
 public:
  explicit ArithmeticDecoder(const CodedPayload& payload);
  int Decode(std::span<const uint32_t> freqs);

 private:
  int NextBit();

  const CodedPayload* payload_;
  uint64_t low_ = 0;
  uint64_t high_ = 0xFFFFFFFFull;
  uint64_t value_ = 0;
  uint64_t read_ = 0;
};

}  // namespace hsc

#endif  // HSC_ARITH_CODER_H_
