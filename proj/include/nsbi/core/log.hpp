#pragma once

#include <string>

namespace nsbi {

enum class LogLevel { kQuiet = 0, kWarning = 1, kInfo = 2 };

void set_log_level(LogLevel level);
LogLevel log_level();

void log_warning(const std::string& msg);
void log_info(const std::string& msg);

}  // namespace nsbi
