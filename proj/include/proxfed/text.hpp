#ifndef PROXFED_TEXT_HPP
#define PROXFED_TEXT_HPP

#include <optional>
#include <string>
#include <string_view>

namespace proxfed {

/// Shortest decimal form that round-trips; locale independent.
std::string format_double(double v);

/// Whole-token parse; accepts a leading '+'. nullopt on any junk.
std::optional<double> parse_double(std::string_view token);

}  // namespace proxfed

#endif  // PROXFED_TEXT_HPP
