#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace fire {

enum class LogLevel { debug, info, warn, error };

using LogField = std::pair<std::string_view, std::string>;

/// Minimum level written; defaults to info.
void set_log_level(LogLevel level);
LogLevel parse_log_level(std::string_view s);

/// One `key=value` line on stderr: level, stage, msg, then the fields.
/// Values containing spaces, quotes or '=' are double-quoted.
void log(LogLevel level, std::string_view stage, std::string_view msg, std::initializer_list<LogField> fields = {});

} // namespace fire
