#include "tourkit/common.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>

namespace tourkit {

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("TOURKIT_LOG");
    if (env == nullptr) return LogLevel::kWarn;
    const std::string_view v(env);
    if (v == "error") return LogLevel::kError;
    if (v == "warn") return LogLevel::kWarn;
    if (v == "info") return LogLevel::kInfo;
    if (v == "debug") return LogLevel::kDebug;
    return LogLevel::kWarn;
  }();
  return level;
}

void log_message(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static std::mutex mu;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::cerr << "[tourkit:" << names[static_cast<int>(level)] << "] " << message << "\n";
}

}  // namespace tourkit
