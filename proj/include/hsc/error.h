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

#ifndef HSC_ERROR_H_
#define HSC_ERROR_H_

#include <stdexcept>
#include <string>

namespace hsc {

// Failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  kUsage,       // bad arguments or configuration values
  kIo,          // file missing, unreadable, short write
  kFormat,      // malformed stream, digest or checksum mismatch
  kShape,       // tensor shape contract violated
  kNumerical,   // NaN/Inf or divergence
  kDegenerate,  // input carries no usable signal
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void Fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void Check(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) Fail(kind, what);
}

}  // namespace hsc

#endif  // HSC_ERROR_H_
