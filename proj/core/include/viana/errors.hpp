#pragma once

#include <stdexcept>
#include <string>

namespace viana {

// Exact hit of the critical/singular set; the operation has no value there.
struct SingularityError : std::domain_error {
    using std::domain_error::domain_error;
};

// A fit was requested on data the model family cannot represent.
struct UnfittableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative routine failed to reach its tolerance; partial results may
// still be reported by the caller.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration. `line` is 1-based; 0 when the error is
// not tied to a specific line of the config text.
struct ConfigError : std::runtime_error {
    int line;
    explicit ConfigError(const std::string& msg, int line_no = 0)
        : std::runtime_error(line_no > 0 ? "line " + std::to_string(line_no) + ": " + msg : msg),
          line(line_no) {}
};

}  // namespace viana
