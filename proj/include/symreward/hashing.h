/* Copyright 2026 The symreward Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef SYMREWARD_HASHING_H_
#define SYMREWARD_HASHING_H_

#include <filesystem>
#include <string>
#include <string_view>

namespace symreward {

// Lowercase hex SHA-256.
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& file);

// splitmix64 finalizer; used to derive independent per-record seeds.
constexpr unsigned long long MixSeed(unsigned long long x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr unsigned long long MixSeed(unsigned long long a,
                                     unsigned long long b) {
  return MixSeed(MixSeed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

}  // namespace symreward

#endif  // SYMREWARD_HASHING_H_
