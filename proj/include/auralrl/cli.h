#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace auralrl {

// Exit codes: 0 success, 1 validation error or bad usage, 2 I/O error.
inline constexpr int k_exit_ok         = 0;
inline constexpr int k_exit_validation = 1;
inline constexpr int k_exit_io         = 2;

// args excludes the program name.
int dispatch(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

} // namespace auralrl
