#pragma once

#include <cstdlib>
#include <iostream>
#include <string>

/// Minimal diagnostic logging on the error stream, controlled by the
/// HYPEROBS_LOG environment variable: quiet (default), info, debug.
namespace hyperobs {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

inline LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("HYPEROBS_LOG");
        if (env == nullptr) return LogLevel::quiet;
        const std::string v(env);
        if (v == "debug") return LogLevel::debug;
        if (v == "info") return LogLevel::info;
        return LogLevel::quiet;
    }();
    return level;
}

inline void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::cerr << "[hyperobs] " << msg << '\n';
}

inline void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug) std::cerr << "[hyperobs:debug] " << msg << '\n';
}

}  // namespace hyperobs
