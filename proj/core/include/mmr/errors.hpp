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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmr {

enum class ErrorKind {
    kConfig,
    kInput,
    kShape,
    kDomain,
    kNumeric,
    kSpan,
    kDocument,
    kMissingEmbedding,
    kData,
    kGeneration,
    kState,
    kFormat,
    kCorruption,
    kUnsupportedVersion,
    kIo,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so the
/// command-line layer can map it onto a process exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

/// 2 config, 3 data/format/io, 4 numeric/shape/domain.
int exit_code_for(ErrorKind kind);

}  // namespace mmr
