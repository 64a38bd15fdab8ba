#include "nsbi/core/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace nsbi {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::kWarning)};
std::mutex g_mutex;
}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }
LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

void log_warning(const std::string& msg) {
  if (g_level.load() < static_cast<int>(LogLevel::kWarning)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << "warning: " << msg << '\n';
}

void log_info(const std::string& msg) {
  if (g_level.load() < static_cast<int>(LogLevel::kInfo)) return;
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << msg << '\n';
}

}  // namespace nsbi
