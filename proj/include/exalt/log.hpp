#pragma once

#include <string>

namespace exalt {

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

void set_log_level(LogLevel level);
LogLevel log_level();

// Reads EXALT_LOG (error|warn|info|debug) and applies it. Unknown values
// keep the current level and emit a warning. Returns the active level.
LogLevel init_log_from_env();

// Writes "exalt <level>: <msg>" to stderr when `level` is at or below the
// active verbosity.
void log(LogLevel level, const std::string& msg);

inline void log_error(const std::string& msg) { log(LogLevel::error, msg); }
inline void log_warn(const std::string& msg) { log(LogLevel::warn, msg); }
inline void log_info(const std::string& msg) { log(LogLevel::info, msg); }
inline void log_debug(const std::string& msg) { log(LogLevel::debug, msg); }

} // namespace exalt
