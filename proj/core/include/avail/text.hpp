#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace avail {

/// Shortest decimal representation that round-trips the exact double;
/// deterministic, locale-free, used by every CSV artifact.
inline std::string double_to_string(double v) {
	char buf[64];
	const std::to_chars_result res = std::to_chars(buf, buf + sizeof(buf), v);
	return std::string(buf, res.ptr);
}

} // namespace avail
