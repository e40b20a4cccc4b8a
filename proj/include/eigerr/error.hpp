#pragma once

#include <stdexcept>
#include <string>

namespace eigerr {

// Precondition and input validation failures. The CLI maps these to exit code 1.
class config_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical failures: eigensolver or quadrature non-convergence, restart caps.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw config_error(what);
}

}  // namespace eigerr
