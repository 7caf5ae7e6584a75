// Copyright 2026 The qintent Authors.
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
#include "qintent/error.h"

namespace qintent {

std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kDuplicateId: return "duplicate id";
    case ErrorKind::kEmpty: return "empty input";
    case ErrorKind::kUnknownLabel: return "unknown label";
    case ErrorKind::kMalformedLine: return "malformed line";
    case ErrorKind::kRatioSum: return "ratio sum";
    case ErrorKind::kTooSmall: return "too small";
    case ErrorKind::kMissingAnnotation: return "missing annotation";
    case ErrorKind::kMissingPersona: return "missing persona";
    case ErrorKind::kMissingEmbedding: return "missing embedding";
    case ErrorKind::kMissingVector: return "missing vector";
    case ErrorKind::kShapeMismatch: return "shape mismatch";
    case ErrorKind::kRegistryMismatch: return "registry mismatch";
    case ErrorKind::kWeightLength: return "weight length mismatch";
    case ErrorKind::kOutOfRange: return "out of range";
    case ErrorKind::kNanLoss: return "nan loss";
    case ErrorKind::kIdMismatch: return "id mismatch";
    case ErrorKind::kUnparseableResponse: return "unparseable response";
    case ErrorKind::kConfig: return "configuration error";
    case ErrorKind::kIo: return "i/o error";
    case ErrorKind::kPrecondition: return "precondition violated";
    case ErrorKind::kStage: return "stage failed";
  }
  return "error";
}

}  // namespace qintent
