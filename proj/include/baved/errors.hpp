// Copyright 2026 The baved-ser Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace baved {

/// Broad failure family. The CLI maps each family to a distinct exit code.
enum class ErrorCategory {
  kConfig,    // exit 2
  kData,      // exit 3
  kTraining,  // exit 4
  kIo,        // exit 1
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), category_(category), kind_(kind) {}

  ErrorCategory category() const noexcept { return category_; }
  const std::string& kind() const noexcept { return kind_; }

 private:
  ErrorCategory category_;
  std::string kind_;
};

#define BAVED_DEFINE_ERROR(Name, Category)                                \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(Category, #Name, what) {} \
  };

// dataset
BAVED_DEFINE_ERROR(MalformedName, ErrorCategory::kData)
BAVED_DEFINE_ERROR(EmptyCorpus, ErrorCategory::kData)
BAVED_DEFINE_ERROR(InconsistentLabel, ErrorCategory::kData)
BAVED_DEFINE_ERROR(DegenerateClass, ErrorCategory::kData)
BAVED_DEFINE_ERROR(DecodeFailure, ErrorCategory::kData)
BAVED_DEFINE_ERROR(TooShort, ErrorCategory::kData)

// backbones
BAVED_DEFINE_ERROR(CheckpointUnavailable, ErrorCategory::kTraining)
BAVED_DEFINE_ERROR(BackboneFailure, ErrorCategory::kTraining)
BAVED_DEFINE_ERROR(CorruptCacheEntry, ErrorCategory::kData)

// heads and trainer
BAVED_DEFINE_ERROR(DimensionMismatch, ErrorCategory::kTraining)
BAVED_DEFINE_ERROR(NonFiniteLoss, ErrorCategory::kTraining)
BAVED_DEFINE_ERROR(EmptyEvalSet, ErrorCategory::kData)
BAVED_DEFINE_ERROR(ArtifactMismatch, ErrorCategory::kTraining)

// metrics
BAVED_DEFINE_ERROR(LengthMismatch, ErrorCategory::kData)
BAVED_DEFINE_ERROR(LabelOutOfRange, ErrorCategory::kData)
BAVED_DEFINE_ERROR(EmptyMatrix, ErrorCategory::kData)

// experiment front end
BAVED_DEFINE_ERROR(ConfigError, ErrorCategory::kConfig)
BAVED_DEFINE_ERROR(WriteFailure, ErrorCategory::kIo)

#undef BAVED_DEFINE_ERROR

}  // namespace baved
