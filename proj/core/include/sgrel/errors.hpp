#pragma once

#include <stdexcept>
#include <string>

namespace sgrel {

/// Matrix/vector extents do not line up (feature dim vs. weight rows, etc.).
struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Parameter and gradient shapes differ in an update.
struct ShapeMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// flat_forward called on parameters without a flat head.
struct MissingFlatHead : std::logic_error {
  using std::logic_error::logic_error;
};

/// target_rel does not belong to target_sc's category.
struct TargetCategoryMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// k-means asked for more clusters than points.
struct TooFewPoints : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A super-category ended up with no relations.
struct EmptyCategory : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Dataset carries no ground-truth triplets at all.
struct NoGroundTruth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No ground-truth triplet qualifies as zero-shot under the given training set.
struct NoZeroShotGroundTruth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file; message carries file/line context where available.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Completion backend unreachable after the configured retries.
struct BackendUnavailable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Backend rejected the request credentials (401/403).
struct AuthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Backend answered but the configured response path was missing.
struct MalformedResponse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sgrel
