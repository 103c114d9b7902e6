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


#ifndef HSC_CONFIG_H_
#define HSC_CONFIG_H_

#include <cstdint>
#include <map>
#include <string>

namespace hsc {

// Line-oriented key=value text; '#' starts a comment, blank lines are
// skipped, later keys override earlier ones.
using KeyValues = std::map<std::string, std::string>;

KeyValues ParseKeyValues(const std::string& text);
KeyValues LoadKeyValues(const std::string& path);

// Typed lookups that consume the key; leftover keys after every consumer
// has run are a usage error (see RejectUnknown).
class ConfigReader {
 public:
  explicit ConfigReader(KeyValues values) : values_(std::move(values)) {}

  void Get(const std::string& key, int& out);
  void Get(const std::string& key, double& out);
  void Get(const std::string& key, uint64_t& out);
  void Get(const std::string& key, bool& out);
  void Get(const std::string& key, std::string& out);

  // Throws kUsage naming the first key nobody consumed.
  void RejectUnknown() const;

 private:
  KeyValues values_;
};

}  // namespace hsc

#endif  // HSC_CONFIG_H_
