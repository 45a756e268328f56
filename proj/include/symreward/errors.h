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

#ifndef SYMREWARD_ERRORS_H_
#define SYMREWARD_ERRORS_H_

#include <stdexcept>
#include <string>

namespace symreward {

// Root of every error raised by the library. Callers that only need to know
// "something about the inputs was wrong" can catch this.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define SYMREWARD_DEFINE_ERROR(Name)   \
  class Name : public Error {          \
   public:                             \
    using Error::Error;                \
  }

// Config documents.
SYMREWARD_DEFINE_ERROR(ParseError);
SYMREWARD_DEFINE_ERROR(SchemaError);
SYMREWARD_DEFINE_ERROR(InvariantError);

// Sequence and conversation shape.
SYMREWARD_DEFINE_ERROR(LengthError);
SYMREWARD_DEFINE_ERROR(LengthMismatch);
SYMREWARD_DEFINE_ERROR(IncompleteConversation);
SYMREWARD_DEFINE_ERROR(DegenerateTarget);
SYMREWARD_DEFINE_ERROR(UnknownStep);
SYMREWARD_DEFINE_ERROR(UnknownLabel);

// Synthesis.
SYMREWARD_DEFINE_ERROR(MissingTemplate);
SYMREWARD_DEFINE_ERROR(InsufficientTemplates);

// Evaluation.
SYMREWARD_DEFINE_ERROR(JoinError);
SYMREWARD_DEFINE_ERROR(DatasetMismatch);

// Policy simulator.
SYMREWARD_DEFINE_ERROR(EmptyDataset);
SYMREWARD_DEFINE_ERROR(DivergenceError);
SYMREWARD_DEFINE_ERROR(InvalidStep);

// Files and transport.
SYMREWARD_DEFINE_ERROR(IoError);
SYMREWARD_DEFINE_ERROR(TransportError);

#undef SYMREWARD_DEFINE_ERROR

}  // namespace symreward

#endif  // SYMREWARD_ERRORS_H_
