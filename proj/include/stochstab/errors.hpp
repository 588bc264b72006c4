#pragma once

#include <stdexcept>
#include <string>

namespace stochstab {

/// Incompatible ambient dimensions or subspace dimensions.
struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Singular value gap at the requested index is too small to split spaces.
struct DegenerateGap : std::runtime_error {
    double ratio;
    explicit DegenerateGap(double r)
        : std::runtime_error("singular value gap too small (ratio " +
                             std::to_string(r) + ")"),
          ratio(r) {}
};

/// The matrix kills the directions needed for the requested space.
struct RankDeficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Subspace meets the chart's complement E; no chart matrix exists.
struct TransversalityFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The image subspace left the target chart (W + X B0 singular).
struct ChartEscape : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A noise window was queried outside its index range.
struct WindowUnderrun : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Config file failed to parse or validate; carries the offending field.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string f, const std::string& message)
        : std::runtime_error(f.empty() ? message : f + ": " + message),
          field(std::move(f)) {}
};

}  // namespace stochstab
