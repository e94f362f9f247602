#pragma once

#include <atomic>
#include <iostream>
#include <mutex>
#include <string>

namespace pnf::log {

enum class Level { debug = 0, info = 1, warn = 2, silent = 3 };

inline std::atomic<int>& threshold() {
  static std::atomic<int> level{static_cast<int>(Level::warn)};
  return level;
}

inline std::atomic<long>& warning_count() {
  static std::atomic<long> count{0};
  return count;
}

inline void set_level(Level level) { threshold() = static_cast<int>(level); }

inline void write(Level level, const std::string& message) {
  if (level == Level::warn) ++warning_count();
  if (static_cast<int>(level) < threshold().load()) return;
  static std::mutex mu;
  std::lock_guard lock(mu);
  static constexpr const char* tags[] = {"debug", "info", "warn"};
  std::clog << "[pnf:" << tags[static_cast<int>(level)] << "] " << message << '\n';
}

inline void debug(const std::string& message) { write(Level::debug, message); }
inline void info(const std::string& message) { write(Level::info, message); }
inline void warn(const std::string& message) { write(Level::warn, message); }

}  // namespace pnf::log
