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

#ifndef SYMREWARD_IO_H_
#define SYMREWARD_IO_H_

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace symreward {

// Throw IoError on failure.
std::string ReadTextFile(const std::filesystem::path& file);
void WriteTextFile(const std::filesystem::path& file, std::string_view text);

// Splits on '\n', dropping blank lines and a trailing '\r'.
std::vector<std::string> SplitLines(std::string_view text);

}  // namespace symreward

#endif  // SYMREWARD_IO_H_
