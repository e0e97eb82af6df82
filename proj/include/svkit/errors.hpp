#pragma once

#include <stdexcept>
#include <string>

namespace svkit {

// Error categories surfaced by the CLI as "category: message" lines.
enum class ErrorCategory {
  kUsage,
  kConfig,
  kIo,
  kCorpus,
  kFeature,
  kVad,
  kDimension,
  kDomain,
  kContext,
  kPooling,
  kLookup,
  kNumeric,
  kFusion,
  kMetric,
  kContract,
  kDivergence,
};

const char* to_string(ErrorCategory cat);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const { return category_; }

  /// One-line machine-parsable form: "category: message".
  std::string formatted() const {
    return std::string(to_string(category_)) + ": " + what();
  }

 private:
  ErrorCategory category_;
};

}  // namespace svkit
