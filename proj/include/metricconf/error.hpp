#pragma once

#include <stdexcept>
#include <string>

namespace metricconf {

// Raised on malformed or inconsistent input data (parse failures,
// incomplete score matrices, unknown metric names).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Raised when an operation's preconditions are violated (bad dimensions,
// out-of-range parameters, degenerate inputs).
class domain_error : public std::invalid_argument {
public:
    explicit domain_error(const std::string& what) : std::invalid_argument(what) {}
};

} // namespace metricconf
