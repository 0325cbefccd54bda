// Copyright 2026 The mmr Authors
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

#include "mmr/errors.hpp"

namespace mmr {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kConfig: return "config error";
        case ErrorKind::kInput: return "input error";
        case ErrorKind::kShape: return "shape error";
        case ErrorKind::kDomain: return "domain error";
        case ErrorKind::kNumeric: return "numeric error";
        case ErrorKind::kSpan: return "span error";
        case ErrorKind::kDocument: return "document error";
        case ErrorKind::kMissingEmbedding: return "missing embedding";
        case ErrorKind::kData: return "data error";
        case ErrorKind::kGeneration: return "generation error";
        case ErrorKind::kState: return "state error";
        case ErrorKind::kFormat: return "format error";
        case ErrorKind::kCorruption: return "corruption error";
        case ErrorKind::kUnsupportedVersion: return "unsupported version";
        case ErrorKind::kIo: return "io error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::kConfig:
            return 2;
        case ErrorKind::kNumeric:
        case ErrorKind::kShape:
        case ErrorKind::kDomain:
            return 4;
        default:
            return 3;
    }
}

}  // namespace mmr
