#pragma once

#include <string_view>

namespace popvb {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

// Threshold from the POPVB_LOG environment variable (error, warn, info,
// debug); warn when unset or unrecognised.
LogLevel log_threshold();
void log_message(LogLevel level, std::string_view message);

}  // namespace popvb
