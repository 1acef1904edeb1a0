#include "popvb/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace popvb {

LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("POPVB_LOG");
    const std::string v = env ? env : "";
    if (v == "error") return LogLevel::kError;
    if (v == "info") return LogLevel::kInfo;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

void log_message(LogLevel level, std::string_view message) {
  if (level > log_threshold()) return;
  static std::mutex mu;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  std::lock_guard lock(mu);
  std::cerr << "[popvb " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace popvb
