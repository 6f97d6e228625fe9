#pragma once

#include <stdexcept>

namespace rodd {

// Input violated a schema, invariant or operation precondition.
// The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem or stream failure. The CLI maps this to exit code 2.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace rodd
