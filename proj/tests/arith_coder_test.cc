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


#include <cmath>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"
#include "hsc/arith_coder.h"
#include "hsc/grid_coder.h"
#include "test_util.h"

namespace hsc {
namespace {

using testing::EvenCenters;
using testing::RandomCond;
using testing::RandomContextModel;
using testing::RandomGrid;

CodedPayload EncodeStatic(const std::vector<uint32_t>& freqs,
                          const std::vector<int32_t>& symbols) {
  ArithmeticEncoder enc;
  for (int32_t s : symbols) enc.Encode(freqs, s);
  return enc.Finish(symbols);
}

TEST(FrequencyTest, SumsToTotalWithMinimumOne) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int L = rng.IntIn(2, 64);
    std::vector<double> pmf(L);
    for (double& p : pmf) p = rng.Uniform() < 0.3 ? 0.0 : rng.Uniform();
    pmf[rng.Below(L)] += 1e-3;
    const std::vector<uint32_t> f = QuantizeFrequencies(pmf);
    EXPECT_EQ(std::accumulate(f.begin(), f.end(), uint64_t{0}), kFrequencyTotal);
    for (uint32_t v : f) EXPECT_GE(v, 1u);
  }
}

TEST(FrequencyTest, LargestRemainderRounding) {
  // 65533 spare counts split 1/3 each: floors 21844 x3 = 65532, one left over
  // goes to the lowest index.
  const std::vector<uint32_t> f = QuantizeFrequencies(std::vector<double>{1, 1, 1});
  EXPECT_EQ(f, (std::vector<uint32_t>{21846, 21845, 21845}));
  const std::vector<uint32_t> g = QuantizeFrequencies(std::vector<double>{0.25, 0.25, 0.25, 0.25});
  EXPECT_EQ(g, (std::vector<uint32_t>{16384, 16384, 16384, 16384}));
}

TEST(FrequencyTest, DegenerateInputsRejected) {
  EXPECT_THROW(QuantizeFrequencies(std::vector<double>{0, 0}), Error);
  EXPECT_THROW(QuantizeFrequencies(std::vector<double>{1, NAN}), Error);
  EXPECT_THROW(QuantizeFrequencies(std::vector<double>{1, -1}), Error);
}

TEST(ArithmeticCoderTest, UniformFourSymbolsCostTwoBits) {
  Rng rng(1);
  const std::vector<uint32_t> freqs(4, kFrequencyTotal / 4);
  for (int n : {1, 10, 1000, 5000}) {
    std::vector<int32_t> symbols(n);
    for (int32_t& s : symbols) s = static_cast<int32_t>(rng.Below(4));
    const CodedPayload p = EncodeStatic(freqs, symbols);
    EXPECT_GE(p.declared_bits, 2u * n);
    EXPECT_LE(p.declared_bits, 2u * n + 32);
    ArithmeticDecoder dec(p);
    for (int i = 0; i < n; ++i) ASSERT_EQ(dec.Decode(freqs), symbols[i]);
  }
}

TEST(ArithmeticCoderTest, NearCertainSymbolIsCheap) {
  const std::vector<double> pmf = {1.0 - 1.0 / 65536, 1.0 / 65536};
  const std::vector<uint32_t> freqs = QuantizeFrequencies(pmf);
  const CodedPayload p = EncodeStatic(freqs, {0});
  EXPECT_LE(p.declared_bits, 32u);
  ArithmeticDecoder dec(p);
  EXPECT_EQ(dec.Decode(freqs), 0);
}

TEST(ArithmeticCoderTest, EmptyStream) {
  const CodedPayload p = EncodeStatic({kFrequencyTotal / 2, kFrequencyTotal / 2}, {});
  EXPECT_EQ(p.symbol_count, 0u);
  EXPECT_EQ(p.declared_bits, 0u);
  EXPECT_TRUE(p.bytes.empty());
  ByteWriter w;
  WritePayload(p, w);
  EXPECT_EQ(w.bytes().size(), 20u);
}

TEST(ArithmeticCoderTest, PayloadSerialisationRoundTrip) {
  Rng rng(4);
  std::vector<int32_t> symbols(333);
  for (int32_t& s : symbols) s = static_cast<int32_t>(rng.Below(3));
  const CodedPayload p = EncodeStatic(QuantizeFrequencies(std::vector<double>{0.5, 0.3, 0.2}), symbols);
  EXPECT_LE(p.declared_bits, 8 * p.bytes.size());
  EXPECT_LE(8 * p.bytes.size(), p.declared_bits + 8);
  ByteWriter w;
  WritePayload(p, w);
  ByteReader r(w.bytes());
  const CodedPayload back = ReadPayload(r);
  EXPECT_EQ(back.symbol_count, p.symbol_count);
  EXPECT_EQ(back.declared_bits, p.declared_bits);
  EXPECT_EQ(back.bytes, p.bytes);
  EXPECT_EQ(back.checksum, p.checksum);
}

TEST(GridCoderTest, RoundTripAcrossShapesAndAlphabets) {
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    const int L = std::vector<int>{2, 6, 16}[trial % 3];
    const int K = (trial / 3) % 2;
    ContextModel<float> model = RandomContextModel<float>(L, K, 1000 + trial);
    const Shape grid = {rng.IntIn(1, 4), rng.IntIn(1, 5), rng.IntIn(1, 5)};
    const QuantizedLatent q = RandomGrid(grid, L, rng);
    const auto centers = EvenCenters<float>(L);
    const std::vector<float> cond = RandomCond<float>(K, q.size(), rng);
    const CodedPayload p = EncodeGrid<float>(model, q, cond, centers);
    const QuantizedLatent back = DecodeGrid<float>(model, p, grid, cond, centers);
    EXPECT_EQ(back.symbols, q.symbols);
  }
}

TEST(GridCoderTest, EmptyGrid) {
  ContextModel<float> model = RandomContextModel<float>(6, 0, 1);
  QuantizedLatent q{{0, 4, 4}, {}, 0};
  const CodedPayload p = EncodeGrid<float>(model, q, {}, EvenCenters<float>(6));
  EXPECT_EQ(p.symbol_count, 0u);
  EXPECT_EQ(p.declared_bits, 0u);
  EXPECT_TRUE(DecodeGrid<float>(model, p, {0, 4, 4}, {}, EvenCenters<float>(6)).symbols.empty());
}

TEST(GridCoderTest, LengthTracksTheModel) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    ContextModel<float> model = RandomContextModel<float>(6, 0, 50 + trial);
    const QuantizedLatent q = RandomGrid({6, 8, 8}, 6, rng);
    GridCodingStats stats;
    const auto centers = EvenCenters<float>(6);
    const CodedPayload p = EncodeGrid<float>(model, q, {}, centers, &stats);
    const double estimate = RateEstimate(PredictPmfs<float>(model, q, {}, centers), 6, q.symbols);
    EXPECT_NEAR(stats.model_bits, estimate, 1e-6 * estimate);
    EXPECT_LE(std::abs(static_cast<double>(p.declared_bits) - estimate), q.size() * 0.05 + 64);
    EXPECT_LE(static_cast<double>(p.declared_bits) - stats.ideal_bits, 32.0);
  }
}

TEST(GridCoderTest, TruncatedPayloadReported) {
  ContextModel<float> model = RandomContextModel<float>(6, 0, 9);
  Rng rng(2);
  const QuantizedLatent q = RandomGrid({4, 4, 4}, 6, rng);
  const auto centers = EvenCenters<float>(6);
  const CodedPayload p = EncodeGrid<float>(model, q, {}, centers);
  ByteWriter w;
  WritePayload(p, w);
  std::vector<uint8_t> bytes = w.bytes();
  bytes.pop_back();
  ByteReader r(bytes);
  try {
    ReadPayload(r);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }

  // Dropping the last coded byte but keeping the container consistent is
  // caught by the checksum.
  CodedPayload cut = p;
  cut.bytes.pop_back();
  cut.declared_bits = 8 * cut.bytes.size();
  try {
    DecodeGrid<float>(model, cut, {4, 4, 4}, {}, centers);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFormat);
  }
}

TEST(GridCoderTest, WrongModelDetected) {
  ContextModel<float> model = RandomContextModel<float>(6, 0, 9);
  ContextModel<float> other = RandomContextModel<float>(6, 0, 10);
  Rng rng(2);
  const QuantizedLatent q = RandomGrid({4, 6, 6}, 6, rng);
  const auto centers = EvenCenters<float>(6);
  const CodedPayload p = EncodeGrid<float>(model, q, {}, centers);
  EXPECT_THROW(DecodeGrid<float>(other, p, {4, 6, 6}, {}, centers), Error);
}

}  // namespace
}  // namespace hsc
