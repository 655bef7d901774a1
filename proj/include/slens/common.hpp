#pragma once

#include <stdexcept>
#include <string>

namespace slens {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes used by the CLI: usage/config -> 2, data/format -> 3,
// numerical failure -> 4.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace slens
