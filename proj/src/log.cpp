#include "boxlift/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string>

namespace boxlift {

namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("BOXLIFT_LOG");
  if (!env) return LogLevel::Warn;
  const std::string v(env);
  if (v == "error") return LogLevel::Error;
  if (v == "info") return LogLevel::Info;
  if (v == "debug") return LogLevel::Debug;
  return LogLevel::Warn;
}

constexpr const char* kNames[] = {"error", "warn", "info", "debug"};

}  // namespace

LogLevel log_level() {
  static const LogLevel level = level_from_env();
  return level;
}

void log(LogLevel level, std::string_view message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static std::mutex mu;
  const std::lock_guard lock(mu);
  std::cerr << "[boxlift " << kNames[static_cast<int>(level)] << "] " << message << '\n';
}

}  // namespace boxlift
