#include "fire/log.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <mutex>

#include "fire/error.hpp"

namespace fire {

namespace {

std::atomic<LogLevel> g_level{LogLevel::info};
std::mutex g_mutex;

std::string_view level_name(LogLevel l) {
    switch (l) {
    case LogLevel::debug: return "debug";
    case LogLevel::info: return "info";
    case LogLevel::warn: return "warn";
    case LogLevel::error: return "error";
    }
    return "info";
}

void append_value(std::string& out, std::string_view v) {
    const bool quote = v.empty() || v.find_first_of(" \t\"=\n") != std::string_view::npos;
    if (!quote) {
        out += v;
        return;
    }
    out += '"';
    for (char c : v) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    out += '"';
}

} // namespace

void set_log_level(LogLevel level) { g_level = level; }

LogLevel parse_log_level(std::string_view s) {
    if (s == "debug") return LogLevel::debug;
    if (s == "info") return LogLevel::info;
    if (s == "warn") return LogLevel::warn;
    if (s == "error") return LogLevel::error;
    throw InputError("unknown log level '" + std::string(s) + "' (expected debug|info|warn|error)");
}

void log(LogLevel level, std::string_view stage, std::string_view msg, std::initializer_list<LogField> fields) {
    if (level < g_level.load()) return;

    const auto now = std::chrono::system_clock::now();
    const std::time_t secs = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char ts[64];
    std::snprintf(ts, sizeof ts, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                  tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));

    std::string line = "ts=";
    line += ts;
    line += " level=";
    line += level_name(level);
    line += " stage=";
    append_value(line, stage);
    line += " msg=";
    append_value(line, msg);
    for (const auto& [k, v] : fields) {
        line += ' ';
        line += k;
        line += '=';
        append_value(line, v);
    }
    line += '\n';

    std::lock_guard lock(g_mutex);
    std::fputs(line.c_str(), stderr);
}

} // namespace fire
