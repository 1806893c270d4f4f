#pragma once

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <string>

namespace torsotext {

enum class LogLevel { Silent = 0, Error = 1, Warn = 2, Info = 3, Debug = 4 };

// Verbosity comes from TORSOTEXT_LOG (silent|error|warn|info|debug), default warn.
inline LogLevel log_level() {
  static LogLevel level = [] {
    const char* env = std::getenv("TORSOTEXT_LOG");
    if (!env) return LogLevel::Warn;
    std::string v(env);
    if (v == "silent" || v == "off" || v == "0") return LogLevel::Silent;
    if (v == "error") return LogLevel::Error;
    if (v == "warn") return LogLevel::Warn;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

template <typename... Args>
inline void log_at(LogLevel lvl, const char* tag, const char* fmt, Args... args) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  std::fprintf(stderr, "[%s] ", tag);
  std::fprintf(stderr, fmt, args...);
  std::fprintf(stderr, "\n");
}

inline void log_at(LogLevel lvl, const char* tag, const char* msg) {
  if (static_cast<int>(lvl) > static_cast<int>(log_level())) return;
  std::fprintf(stderr, "[%s] %s\n", tag, msg);
}

#define TORSOTEXT_LOG_ERROR(...) ::torsotext::log_at(::torsotext::LogLevel::Error, "error", __VA_ARGS__)
#define TORSOTEXT_LOG_WARN(...) ::torsotext::log_at(::torsotext::LogLevel::Warn, "warn", __VA_ARGS__)
#define TORSOTEXT_LOG_INFO(...) ::torsotext::log_at(::torsotext::LogLevel::Info, "info", __VA_ARGS__)
#define TORSOTEXT_LOG_DEBUG(...) ::torsotext::log_at(::torsotext::LogLevel::Debug, "debug", __VA_ARGS__)

}  // namespace torsotext
