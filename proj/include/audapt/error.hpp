// Copyright 2026 The audapt Authors
// SPDX-License-Identifier: Apache-2.0
//
// Error taxonomy. Every error carries a category that the CLI maps onto a
// process exit code.

#pragma once

#include <stdexcept>
#include <string>

namespace audapt {

enum class ErrorCategory {
  kConfig = 2,
  kData = 3,
  kNumerical = 4,
  kIO = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const { return category_; }
  int exit_code() const { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

#define AUDAPT_DEFINE_ERROR(Name, Category)                   \
  class Name : public Error {                                 \
   public:                                                    \
    explicit Name(const std::string& what)                    \
        : Error(ErrorCategory::Category, #Name ": " + what) {} \
  };

AUDAPT_DEFINE_ERROR(InvalidAudio, kData)
AUDAPT_DEFINE_ERROR(ShapeError, kData)
AUDAPT_DEFINE_ERROR(NumericalError, kNumerical)
AUDAPT_DEFINE_ERROR(DegenerateBatch, kData)
AUDAPT_DEFINE_ERROR(LengthError, kData)
AUDAPT_DEFINE_ERROR(CheckpointError, kIO)
AUDAPT_DEFINE_ERROR(MixtureError, kData)
AUDAPT_DEFINE_ERROR(DataError, kData)
AUDAPT_DEFINE_ERROR(SplitError, kData)
AUDAPT_DEFINE_ERROR(ComparisonError, kData)
AUDAPT_DEFINE_ERROR(ConfigError, kConfig)
AUDAPT_DEFINE_ERROR(IOError, kIO)

#undef AUDAPT_DEFINE_ERROR

// Manifest errors cite the 1-based line number of the offending record.
class ManifestError : public Error {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : Error(ErrorCategory::kData,
              "ManifestError: line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace audapt
