// Copyright 2026 The hypogsr Authors.
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

#ifndef HYPOGSR_ERROR_HPP_
#define HYPOGSR_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace hypogsr {

// Who is at fault. The CLI maps these onto exit codes 1, 2 and 3.
enum class ErrorCategory { kUser, kData, kInternal };

class Error : public std::exception {
 public:
  Error(ErrorCategory category, std::string kind, std::string message)
      : category_(category), kind_(std::move(kind)), message_(std::move(message)) {
    rebuild();
  }

  const char* what() const noexcept override { return what_.c_str(); }
  ErrorCategory category() const noexcept { return category_; }
  const std::string& kind() const noexcept { return kind_; }
  const std::string& message() const noexcept { return message_; }

  // Prefixes the message in place, so `catch (Error& e) { e.add_context(..); throw; }`
  // keeps the dynamic type.
  void add_context(std::string_view context) {
    message_ = std::string(context) + ": " + message_;
    rebuild();
  }

 private:
  void rebuild() { what_ = kind_ + ": " + message_; }

  ErrorCategory category_;
  std::string kind_;
  std::string message_;
  std::string what_;
};

#define HYPOGSR_DEFINE_ERROR(Name, Category)                   \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(std::string message)                         \
        : Error(ErrorCategory::Category, #Name, std::move(message)) {} \
  }

HYPOGSR_DEFINE_ERROR(ConfigError, kUser);
HYPOGSR_DEFINE_ERROR(EmptyReportError, kUser);
HYPOGSR_DEFINE_ERROR(ParseError, kData);
HYPOGSR_DEFINE_ERROR(SchemaError, kData);
HYPOGSR_DEFINE_ERROR(EmptyChannelError, kData);
HYPOGSR_DEFINE_ERROR(InsufficientDataError, kData);
HYPOGSR_DEFINE_ERROR(DegenerateSignalError, kData);
HYPOGSR_DEFINE_ERROR(InvalidGlucoseError, kData);
HYPOGSR_DEFINE_ERROR(InsufficientClassError, kData);
HYPOGSR_DEFINE_ERROR(UnstableMetricError, kData);
HYPOGSR_DEFINE_ERROR(ShapeError, kInternal);
HYPOGSR_DEFINE_ERROR(NumericalError, kInternal);
HYPOGSR_DEFINE_ERROR(InvalidSplitError, kInternal);
HYPOGSR_DEFINE_ERROR(StageError, kInternal);

#undef HYPOGSR_DEFINE_ERROR

}  // namespace hypogsr

#endif  // HYPOGSR_ERROR_HPP_
