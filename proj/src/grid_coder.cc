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


#include "hsc/grid_coder.h"

#include <cmath>
#include <vector>

#include "hsc/error.h"

namespace hsc {

template <typename T>
CodedPayload EncodeGrid(const ContextModel<T>& model, const QuantizedLatent& symbols,
                        std::span<const T> cond, std::span<const T> centers,
                        GridCodingStats* stats) {
  Check(symbols.shape.size() == 3, ErrorKind::kShape, "encode: grid must be D x H x W");
  Check(static_cast<int64_t>(symbols.symbols.size()) == NumElements(symbols.shape),
        ErrorKind::kShape, "encode: symbol count does not match the grid");
  SiteEvaluator<T> eval(model, symbols.shape[0], symbols.shape[1], symbols.shape[2],
                        cond, centers);
  const int L = model.config().levels;
  std::vector<double> pmf(L);
  ArithmeticEncoder enc;
  GridCodingStats local;
  local.keep_symbol_bits = stats && stats->keep_symbol_bits;
  for (int64_t s = 0; s < eval.num_sites(); ++s) {
    const int32_t sym = symbols.symbols[s];
    Check(sym >= 0 && sym < L, ErrorKind::kShape, "encode: symbol out of range");
    eval.NextPmf(pmf);
    const std::vector<uint32_t> freqs = QuantizeFrequencies(pmf);
    enc.Encode(freqs, sym);
    const double cost = SymbolCost(freqs, sym);
    local.ideal_bits += cost;
    if (local.keep_symbol_bits) local.symbol_bits.push_back(cost);
    local.model_bits += -std::log2(pmf[sym]);
    eval.Commit(sym);
  }
  if (stats) *stats = std::move(local);
  return enc.Finish(symbols.symbols);
}

template <typename T>
QuantizedLatent DecodeGrid(const ContextModel<T>& model, const CodedPayload& payload,
                           const Shape& grid, std::span<const T> cond,
                           std::span<const T> centers) {
  Check(grid.size() == 3, ErrorKind::kShape, "decode: grid must be D x H x W");
  const int64_t sites = NumElements(grid);
  Check(payload.symbol_count == static_cast<uint64_t>(sites), ErrorKind::kFormat,
        "decode: payload symbol count " + std::to_string(payload.symbol_count) +
            " does not match grid " + ShapeString(grid));
  SiteEvaluator<T> eval(model, grid[0], grid[1], grid[2], cond, centers);
  const int L = model.config().levels;
  std::vector<double> pmf(L);
  ArithmeticDecoder dec(payload);
  QuantizedLatent out;
  out.shape = grid;
  out.symbols.resize(sites);
  for (int64_t s = 0; s < sites; ++s) {
    eval.NextPmf(pmf);
    const std::vector<uint32_t> freqs = QuantizeFrequencies(pmf);
    const int sym = dec.Decode(freqs);
    out.symbols[s] = sym;
    eval.Commit(sym);
  }
  Check(SymbolChecksum(out.symbols) == payload.checksum, ErrorKind::kFormat,
        "decode: checksum mismatch (corrupt payload or model/stream mismatch)");
  return out;
}

#define HSC_INSTANTIATE_GRID(T)                                                  \
  template CodedPayload EncodeGrid<T>(const ContextModel<T>&,                    \
                                      const QuantizedLatent&, std::span<const T>, \
                                      std::span<const T>, GridCodingStats*);      \
  template QuantizedLatent DecodeGrid<T>(const ContextModel<T>&,                 \
                                         const CodedPayload&, const Shape&,      \
                                         std::span<const T>, std::span<const T>);

HSC_INSTANTIATE_GRID(float)
HSC_INSTANTIATE_GRID(double)

}  // namespace hsc
