#pragma once

#include <stdexcept>
#include <string>

namespace zakident {

// Violated preconditions: shape mismatches, out-of-range indices, inconsistent
// inputs. The CLI maps this to exit code 2.
class precondition_error : public std::invalid_argument {
public:
    explicit precondition_error(const std::string& what) : std::invalid_argument(what) {}
};

// An enumeration budget was exceeded (exhaustive spark check, subset sweeps).
// The CLI maps this to exit code 3.
class budget_error : public std::runtime_error {
public:
    explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// File or serialization failures. The CLI maps this to exit code 1.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace zakident
