#include "svkit/errors.hpp"

namespace svkit {

const char* to_string(ErrorCategory cat) {
  switch (cat) {
    case ErrorCategory::kUsage: return "usage";
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kIo: return "io";
    case ErrorCategory::kCorpus: return "corpus";
    case ErrorCategory::kFeature: return "feature";
    case ErrorCategory::kVad: return "vad";
    case ErrorCategory::kDimension: return "dimension";
    case ErrorCategory::kDomain: return "domain";
    case ErrorCategory::kContext: return "context";
    case ErrorCategory::kPooling: return "pooling";
    case ErrorCategory::kLookup: return "lookup";
    case ErrorCategory::kNumeric: return "numeric";
    case ErrorCategory::kFusion: return "fusion";
    case ErrorCategory::kMetric: return "metric";
    case ErrorCategory::kContract: return "contract";
    case ErrorCategory::kDivergence: return "divergence";
  }
  return "error";
}

}  // namespace svkit
