#include "exalt/log.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>

namespace exalt {

namespace {

std::atomic<int> g_level{static_cast<int>(LogLevel::warn)};

const char* level_name(LogLevel level) {
    switch (level) {
    case LogLevel::error: return "error";
    case LogLevel::warn: return "warn";
    case LogLevel::info: return "info";
    default: return "debug";
    }
}

} // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level() { return static_cast<LogLevel>(g_level.load()); }

LogLevel init_log_from_env() {
    set_log_level(LogLevel::warn);
    const char* raw = std::getenv("EXALT_LOG");
    if (raw) {
        std::string v(raw);
        if (v == "error") set_log_level(LogLevel::error);
        else if (v == "warn") set_log_level(LogLevel::warn);
        else if (v == "info") set_log_level(LogLevel::info);
        else if (v == "debug") set_log_level(LogLevel::debug);
        else log_warn("EXALT_LOG='" + v + "' not recognized (valid: error, warn, info, debug)");
    }
    return log_level();
}

void log(LogLevel level, const std::string& msg) {
    if (static_cast<int>(level) > g_level.load()) return;
    std::fprintf(stderr, "exalt %s: %s\n", level_name(level), msg.c_str());
}

} // namespace exalt
