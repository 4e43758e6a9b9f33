#pragma once

#include <stdexcept>
#include <string>

namespace crew {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unreadable/unwritable files, truncated reads, failed renames.
struct io_error : error {
    using error::error;
};

// Bad magic, dimension mismatches, non-finite values, inconsistent streams.
struct format_error : error {
    using error::error;
};

// Bad user-supplied parameters (thresholds, bit widths, block sizes).
struct config_error : error {
    using error::error;
};

}  // namespace crew
