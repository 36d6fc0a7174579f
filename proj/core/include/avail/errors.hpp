#pragma once

#include <stdexcept>
#include <string>

namespace avail {

/// Malformed input data: unreadable CSV/JSON, bad artifact headers.
class ParseError : public std::runtime_error {
public:
	explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Structurally valid input that violates a contract (ranges, invariants).
class ValidationError : public std::runtime_error {
public:
	explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace avail
