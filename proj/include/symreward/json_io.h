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

// JSON forms of conversations, dataset manifests and reward breakdowns.
//
// A dataset file holds one conversation per line:
//   {"image_id": ..., "class_label": ..., "scenario": ..., "seed": ...,
//    "split": ..., "turns": [{"step", "prompt", "target"}, ...],
//    "target_path": [...]}
// plus "hypothesis" for CQ/RQ records.

#ifndef SYMREWARD_JSON_IO_H_
#define SYMREWARD_JSON_IO_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "symreward/reward.h"
#include "symreward/synthesizer.h"

namespace symreward {

nlohmann::json ConversationToJson(const Conversation& conversation);
// Throws SchemaError, UnknownStep or UnknownLabel.
Conversation ConversationFromJson(const nlohmann::json& j);

std::string DatasetToJsonl(std::span<const Conversation> conversations);
// Throws ParseError naming the offending line.
std::vector<Conversation> ParseDatasetJsonl(std::string_view text);
std::vector<Conversation> ReadDatasetFile(const std::filesystem::path& file);

// Parses JSONL, skipping a leading {"meta": ...} line. Throws ParseError.
std::vector<nlohmann::json> ParseJsonl(std::string_view text);

nlohmann::json ManifestToJson(const DatasetManifest& manifest);

nlohmann::json RewardConfigToJson(const RewardConfig& config);
// Applies keys lambda, length_tolerance, length_weight, nomatch_weight and
// enable_{correctness,consistency,length,nomatch}. Unknown keys or wrong
// types throw SchemaError; the result is validated.
RewardConfig ApplyRewardOverrides(RewardConfig base,
                                  const nlohmann::json& overrides);

nlohmann::json BreakdownToJson(const RewardBreakdown& breakdown);

}  // namespace symreward

#endif  // SYMREWARD_JSON_IO_H_
