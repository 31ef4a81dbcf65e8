// SPDX-License-Identifier: MIT
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace pget {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using MaskArray = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// Invalid arguments, shapes, geometry or configuration. CLI exit code 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File system and parsing failures. CLI exit code 3.
struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical breakdown (rank collapse, empty mask, degenerate data). CLI exit code 4.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Diagnostic note on stderr; silenced by PGET_QUIET.
inline void note(const std::string& msg) {
    if (std::getenv("PGET_QUIET") == nullptr) {
        std::fprintf(stderr, "pget: note: %s\n", msg.c_str());
    }
}

} // namespace detail

} // namespace pget
