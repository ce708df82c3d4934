// Copyright 2026 The cswitch Authors.
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

#ifndef CSWITCH_ERROR_H_
#define CSWITCH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace cswitch {

// Error categories; the numeric values are the CLI exit codes.
enum class ErrorCode {
  kConfig = 2,
  kData = 3,
  kTraining = 4,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_config_error(const std::string& message) {
  throw Error(ErrorCode::kConfig, message);
}

[[noreturn]] inline void throw_data_error(const std::string& message) {
  throw Error(ErrorCode::kData, message);
}

[[noreturn]] inline void throw_training_error(const std::string& message) {
  throw Error(ErrorCode::kTraining, message);
}

}  // namespace cswitch

#endif  // CSWITCH_ERROR_H_
