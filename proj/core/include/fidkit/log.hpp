#pragma once

#include <string>
#include <string_view>

namespace fidkit {

enum class LogLevel { Debug = 0, Info = 1, Warn = 2, Error = 3 };

void set_log_level(LogLevel level);
LogLevel log_level_from_string(const std::string& name);

// Line-delimited JSON on stderr: {"ts": ..., "level": ..., "msg": ...}.
// `fields_json` must be a JSON object when non-empty; it is merged in.
void log(LogLevel level, std::string_view msg, std::string_view fields_json = {});

inline void log_info(std::string_view msg, std::string_view fields = {}) {
  log(LogLevel::Info, msg, fields);
}
inline void log_warn(std::string_view msg, std::string_view fields = {}) {
  log(LogLevel::Warn, msg, fields);
}
inline void log_error(std::string_view msg, std::string_view fields = {}) {
  log(LogLevel::Error, msg, fields);
}

}  // namespace fidkit
