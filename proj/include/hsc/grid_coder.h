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


#ifndef HSC_GRID_CODER_H_
#define HSC_GRID_CODER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "hsc/arith_coder.h"
#include "hsc/context_model.h"
#include "hsc/quantizer.h"

namespace hsc {

struct GridCodingStats {
  double ideal_bits = 0.0;  // -sum log2 of the quantized frequencies
  double model_bits = 0.0;  // -sum log2 of the floating PMFs
  // Per-symbol ideal cost in raster order; filled only when keep_symbol_bits
  // is set on entry.
  bool keep_symbol_bits = false;
  std::vector<double> symbol_bits;
};

// Codes a D x H x W symbol volume in raster order under the context model.
template <typename T>
CodedPayload EncodeGrid(const ContextModel<T>& model, const QuantizedLatent& symbols,
                        std::span<const T> cond, std::span<const T> centers,
                        GridCodingStats* stats = nullptr);

// Inverse of EncodeGrid. Reads only the payload and the model; verifies the
// symbol count and checksum and throws kFormat on mismatch.
template <typename T>
QuantizedLatent DecodeGrid(const ContextModel<T>& model, const CodedPayload& payload,
                           const Shape& grid, std::span<const T> cond,
                           std::span<const T> centers);

}  // namespace hsc

#endif  // HSC_GRID_CODER_H_
