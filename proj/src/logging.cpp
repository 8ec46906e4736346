#include "codeslice/logging.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace codeslice::log {

namespace {

std::atomic<Level> g_level{Level::Warning};
std::mutex g_mutex;

void emit(Level at, std::string_view tag, std::string_view message) {
    if (at < g_level.load()) {
        return;
    }
    std::lock_guard<std::mutex> lock(g_mutex);
    std::cerr << "[" << tag << "] " << message << '\n';
}

} // namespace

void set_level(Level level) { g_level.store(level); }
Level level() { return g_level.load(); }

void debug(std::string_view message) { emit(Level::Debug, "debug", message); }
void info(std::string_view message) { emit(Level::Info, "info", message); }
void warning(std::string_view message) { emit(Level::Warning, "warn", message); }
void error(std::string_view message) { emit(Level::Error, "error", message); }

} // namespace codeslice::log
