#pragma once

#include <stdexcept>
#include <string>

namespace clab {

/// Invalid or rejected experiment configuration (unknown key, bad value, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A compute budget (enumeration size, convolution support, Monte Carlo spend)
/// was exceeded. Never silently truncate; raise this instead.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace clab
