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


#include "hsc/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hsc/error.h"

namespace hsc {
namespace {

std::string Trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValues ParseKeyValues(const std::string& text) {
  KeyValues out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    Check(eq != std::string::npos && eq > 0, ErrorKind::kUsage,
          "config line " + std::to_string(lineno) + ": expected key=value");
    out[Trim(line.substr(0, eq))] = Trim(line.substr(eq + 1));
  }
  return out;
}

KeyValues LoadKeyValues(const std::string& path) {
  std::ifstream in(path);
  Check(in.good(), ErrorKind::kIo, "cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseKeyValues(ss.str());
}

void ConfigReader::Get(const std::string& key, int& out) {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  const std::string& v = it->second;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  Check(ec == std::errc() && p == v.data() + v.size(), ErrorKind::kUsage,
        "config " + key + ": not an integer: " + v);
  values_.erase(it);
}

void ConfigReader::Get(const std::string& key, uint64_t& out) {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  const std::string& v = it->second;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  Check(ec == std::errc() && p == v.data() + v.size(), ErrorKind::kUsage,
        "config " + key + ": not an unsigned integer: " + v);
  values_.erase(it);
}

void ConfigReader::Get(const std::string& key, double& out) {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  const std::string& v = it->second;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  Check(ec == std::errc() && p == v.data() + v.size(), ErrorKind::kUsage,
        "config " + key + ": not a number: " + v);
  values_.erase(it);
}

void ConfigReader::Get(const std::string& key, bool& out) {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  const std::string& v = it->second;
  if (v == "true" || v == "1") {
    out = true;
  } else if (v == "false" || v == "0") {
    out = false;
  } else {
    Fail(ErrorKind::kUsage, "config " + key + ": not a boolean: " + v);
  }
  values_.erase(it);
}

void ConfigReader::Get(const std::string& key, std::string& out) {
  auto it = values_.find(key);
  if (it == values_.end()) return;
  out = it->second;
  values_.erase(it);
}

void ConfigReader::RejectUnknown() const {
  if (!values_.empty()) {
    Fail(ErrorKind::kUsage, "unknown config key: " + values_.begin()->first);
  }
}

}  // namespace hsc
