#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace trirast {

/// A violated precondition. Indicates a caller bug, not bad input data.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Malformed input file (mesh, scene, image). `line` is 0 when unknown;
/// for binary formats `offset` holds the byte position instead.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t offset = 0)
        : std::runtime_error(what), line_(line), offset_(offset) {}
    std::size_t line() const { return line_; }
    std::size_t offset() const { return offset_; }

private:
    std::size_t line_;
    std::size_t offset_;
};

/// A fixed-size resource (triangle-ID space, stage queue) is too small for the frame.
class CapacityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define TRIRAST_EXPECTS(cond, msg)                                    \
    do {                                                              \
        if (!(cond)) throw ::trirast::ContractViolation(msg);         \
    } while (false)

}  // namespace trirast
