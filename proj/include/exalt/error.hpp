#ifndef EXALT_ERROR_HPP
#define EXALT_ERROR_HPP

#include <stdexcept>
#include <string>

namespace exalt {

// Invalid configuration or user input (CLI exit code 1).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failure during pipeline execution (CLI exit code 2).
struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& what)
        : std::runtime_error("stage '" + stage + "': " + what), stage_name(stage) {}
    std::string stage_name;
};

} // namespace exalt

#endif // EXALT_ERROR_HPP
