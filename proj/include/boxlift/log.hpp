#pragma once

#include <string_view>

namespace boxlift {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

// Read once from BOXLIFT_LOG (error | warn | info | debug); default warn.
LogLevel log_level();
void log(LogLevel level, std::string_view message);

}  // namespace boxlift
