// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mdreduce {

// Operand or buffer has the wrong element count for the operation.
class SizeError : public std::invalid_argument {
public:
    explicit SizeError(const std::string& what) : std::invalid_argument(what) {}
};

// Simulated thread-block shape outside the supported range for the method.
class UnsupportedBlockSizeError : public std::invalid_argument {
public:
    explicit UnsupportedBlockSizeError(const std::string& what)
        : std::invalid_argument(what) {}
};

// Non-finite value where the algorithm requires finite input.
class NumericDomainError : public std::domain_error {
public:
    explicit NumericDomainError(const std::string& what) : std::domain_error(what) {}
};

// Malformed instance or result text. line == 0 means "not line-addressable".
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& what)
        : std::runtime_error(format(line, what)), line_(line) {}

    int line() const { return line_; }

private:
    static std::string format(int line, const std::string& what) {
        if (line <= 0) return what;
        return "line " + std::to_string(line) + ": " + what;
    }
    int line_;
};

} // namespace mdreduce
