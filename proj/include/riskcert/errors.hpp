#pragma once

#include <stdexcept>
#include <string>

namespace riskcert {

// Invalid input data: malformed logs, numbers outside their domain,
// inconsistent counts. CLI maps this to exit code 1.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// API misuse: wrong loss kind for an operation, mismatched budgets,
// unknown identifiers. CLI maps this to exit code 2.
struct UsageError : std::runtime_error {
    explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace riskcert
