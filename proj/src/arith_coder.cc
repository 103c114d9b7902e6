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


#include "hsc/arith_coder.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hsc/error.h"

namespace hsc {
namespace {

constexpr uint64_t kTop = 0xFFFFFFFFull;
constexpr uint64_t kHalf = 1ull << 31;
constexpr uint64_t kQuarter = 1ull << 30;

struct Interval {
  uint64_t lo, hi;
};

Interval Cumulative(std::span<const uint32_t> freqs, int symbol) {
  uint64_t lo = 0;
  for (int i = 0; i < symbol; ++i) lo += freqs[i];
  return {lo, lo + freqs[symbol]};
}

void CheckTable(std::span<const uint32_t> freqs) {
  Check(freqs.size() >= 1, ErrorKind::kDegenerate, "empty frequency table");
  uint64_t total = 0;
  for (uint32_t f : freqs) {
    Check(f >= 1, ErrorKind::kDegenerate, "zero frequency in table");
    total += f;
  }
  Check(total == kFrequencyTotal, ErrorKind::kDegenerate,
        "frequency table does not sum to the coder total");
}

}  // namespace

std::vector<uint32_t> QuantizeFrequencies(std::span<const double> pmf) {
  const size_t L = pmf.size();
  Check(L >= 1 && L <= kFrequencyTotal, ErrorKind::kDegenerate,
        "pmf size unsupported by the frequency table");
  double sum = 0.0;
  for (double p : pmf) {
    Check(std::isfinite(p) && p >= 0.0, ErrorKind::kDegenerate,
          "pmf entries must be finite and non-negative");
    sum += p;
  }
  Check(sum > 0.0, ErrorKind::kDegenerate, "pmf has no mass");
  const uint64_t spare = kFrequencyTotal - L;
  std::vector<uint32_t> freqs(L, 1);
  std::vector<double> rem(L);
  uint64_t used = 0;
  for (size_t i = 0; i < L; ++i) {
    const double exact = pmf[i] / sum * static_cast<double>(spare);
    const double fl = std::floor(exact);
    freqs[i] += static_cast<uint32_t>(fl);
    used += static_cast<uint64_t>(fl);
    rem[i] = exact - fl;
  }
  // Floating error can push the floors past the budget by a count or two.
  while (used > spare) {
    size_t j = std::max_element(freqs.begin(), freqs.end()) - freqs.begin();
    --freqs[j];
    --used;
  }
  std::vector<size_t> order(L);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return rem[a] > rem[b]; });
  for (size_t k = 0; used < spare; k = (k + 1) % L) {
    ++freqs[order[k]];
    ++used;
  }
  return freqs;
}

double SymbolCost(std::span<const uint32_t> freqs, int symbol) {
  return -std::log2(static_cast<double>(freqs[symbol]) / kFrequencyTotal);
}

uint64_t CodedPayload::SerializedBits() const {
  return 8 * (8 + 8 + bytes.size() + 4);
}

void WritePayload(const CodedPayload& payload, ByteWriter& out) {
  out.U64(payload.symbol_count);
  out.U64(payload.declared_bits);
  out.Raw(payload.bytes);
  out.U32(payload.checksum);
}

CodedPayload ReadPayload(ByteReader& in) {
  CodedPayload p;
  p.symbol_count = in.U64();
  p.declared_bits = in.U64();
  Check(p.declared_bits <= (uint64_t{1} << 40), ErrorKind::kFormat,
        "payload declares an implausible length");
  const uint64_t n = (p.declared_bits + 7) / 8;
  auto raw = in.Raw(n);
  p.bytes.assign(raw.begin(), raw.end());
  p.checksum = in.U32();
  return p;
}

uint32_t SymbolChecksum(std::span<const int32_t> symbols) {
  ByteWriter w;
  for (int32_t s : symbols) w.U32(static_cast<uint32_t>(s));
  return Fnv1a32(w.bytes());
}

void ArithmeticEncoder::EmitBit(int bit) {
  if (bits_ % 8 == 0) bytes_.push_back(0);
  if (bit) bytes_.back() |= static_cast<uint8_t>(0x80u >> (bits_ % 8));
  ++bits_;
}

void ArithmeticEncoder::EmitWithPending(int bit) {
  EmitBit(bit);
  for (; pending_ > 0; --pending_) EmitBit(!bit);
}

void ArithmeticEncoder::Encode(std::span<const uint32_t> freqs, int symbol) {
  CheckTable(freqs);
  Check(symbol >= 0 && symbol < static_cast<int>(freqs.size()), ErrorKind::kShape,
        "arithmetic encoder: symbol out of range");
  const Interval iv = Cumulative(freqs, symbol);
  const uint64_t range = high_ - low_ + 1;
  high_ = low_ + range * iv.hi / kFrequencyTotal - 1;
  low_ = low_ + range * iv.lo / kFrequencyTotal;
  for (;;) {
    if (high_ < kHalf) {
      EmitWithPending(0);
    } else if (low_ >= kHalf) {
      EmitWithPending(1);
      low_ -= kHalf;
      high_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < 3 * kQuarter) {
      ++pending_;
      low_ -= kQuarter;
      high_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
  }
  ++count_;
}

CodedPayload ArithmeticEncoder::Finish(std::span<const int32_t> symbols) {
  Check(symbols.size() == count_, ErrorKind::kUsage,
        "arithmetic encoder: checksum symbols do not match the coded count");
  CodedPayload p;
  p.symbol_count = count_;
  if (count_ > 0) {
    ++pending_;
    EmitWithPending(low_ < kQuarter ? 0 : 1);
  }
  p.declared_bits = bits_;
  p.bytes = std::move(bytes_);
  p.checksum = SymbolChecksum(symbols);
  return p;
}

ArithmeticDecoder::ArithmeticDecoder(const CodedPayload& payload) : payload_(&payload) {
  Check(payload.bytes.size() == (payload.declared_bits + 7) / 8, ErrorKind::kFormat,
        "payload byte length disagrees with its declared bits");
  for (int i = 0; i < 32; ++i) value_ = (value_ << 1) | NextBit();
}

int ArithmeticDecoder::NextBit() {
  // Past the end the stream reads as zeros, matching the encoder's flush.
  if (read_ >= payload_->declared_bits) {
    ++read_;
    return 0;
  }
  const int bit = (payload_->bytes[read_ / 8] >> (7 - read_ % 8)) & 1;
  ++read_;
  return bit;
}

int ArithmeticDecoder::Decode(std::span<const uint32_t> freqs) {
  CheckTable(freqs);
  const uint64_t range = high_ - low_ + 1;
  Check(value_ >= low_ && value_ <= high_, ErrorKind::kFormat,
        "arithmetic decoder lost sync (corrupt payload)");
  const uint64_t target = ((value_ - low_ + 1) * kFrequencyTotal - 1) / range;
  int symbol = 0;
  uint64_t cum = 0;
  while (symbol + 1 < static_cast<int>(freqs.size()) && cum + freqs[symbol] <= target) {
    cum += freqs[symbol];
    ++symbol;
  }
  const Interval iv{cum, cum + freqs[symbol]};
  high_ = low_ + range * iv.hi / kFrequencyTotal - 1;
  low_ = low_ + range * iv.lo / kFrequencyTotal;
  for (;;) {
    if (high_ < kHalf) {
      // nothing to subtract
    } else if (low_ >= kHalf) {
      low_ -= kHalf;
      high_ -= kHalf;
      value_ -= kHalf;
    } else if (low_ >= kQuarter && high_ < 3 * kQuarter) {
      low_ -= kQuarter;
      high_ -= kQuarter;
      value_ -= kQuarter;
    } else {
      break;
    }
    low_ = 2 * low_;
    high_ = 2 * high_ + 1;
    value_ = (2 * value_ + NextBit()) & kTop;
  }
  return symbol;
}

}  // namespace hsc
