#pragma once

#include <string>

namespace lsdgnn {

// Shortest decimal string that parses back to exactly the same double
// (round-trip safe); used everywhere a float crosses a text boundary so
// serialized artifacts are bit-stable.
std::string format_double(double value);

double parse_double(const std::string& text);  // ParseError on junk

}  // namespace lsdgnn
