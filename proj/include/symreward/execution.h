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

#ifndef SYMREWARD_EXECUTION_H_
#define SYMREWARD_EXECUTION_H_

namespace symreward {

// How a batch kernel runs. kSerial is the reference path the parallel one
// is tested against; both produce identical output.
enum class Execution { kSerial, kParallel };

}  // namespace symreward

#endif  // SYMREWARD_EXECUTION_H_
