#pragma once

#include <string_view>

namespace regionsel::log {

// Minimal stderr diagnostics. Tests silence warnings with set_quiet(true).
void warn(std::string_view message);
void info(std::string_view message);
void set_quiet(bool quiet);
bool quiet();

}  // namespace regionsel::log
