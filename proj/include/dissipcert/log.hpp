#pragma once

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <string>
#include <string_view>

namespace dissipcert::log {

enum class Level { Quiet = 0, Info = 1, Debug = 2 };

/// Parses a DISSIPCERT_LOG value; unknown strings fall back to `fallback`.
inline Level parse_level(std::string_view s, Level fallback = Level::Info) {
    if (s == "quiet") return Level::Quiet;
    if (s == "info") return Level::Info;
    if (s == "debug") return Level::Debug;
    return fallback;
}

namespace detail {
inline std::atomic<int>& level_slot() {
    static std::atomic<int> slot = [] {
        const char* env = std::getenv("DISSIPCERT_LOG");
        return static_cast<int>(env ? parse_level(env) : Level::Info);
    }();
    return slot;
}
}  // namespace detail

inline Level level() { return static_cast<Level>(detail::level_slot().load()); }
inline void set_level(Level l) { detail::level_slot().store(static_cast<int>(l)); }

/// Diagnostics go to standard error, never to standard output.
inline void info(const std::string& msg) {
    if (level() >= Level::Info) std::cerr << "dissipcert: " << msg << '\n';
}

inline void debug(const std::string& msg) {
    if (level() >= Level::Debug) std::cerr << "dissipcert[debug]: " << msg << '\n';
}

}  // namespace dissipcert::log
