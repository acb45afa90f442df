#include "fidkit/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

#include "fidkit/errors.hpp"
#include "fidkit/manifest.hpp"
#include "json.hpp"

namespace fidkit {

namespace {
std::atomic<int> g_level{static_cast<int>(LogLevel::Info)};
std::mutex g_mutex;

const char* level_name(LogLevel level) {
  switch (level) {
    case LogLevel::Debug: return "debug";
    case LogLevel::Info: return "info";
    case LogLevel::Warn: return "warn";
    case LogLevel::Error: return "error";
  }
  return "?";
}
}  // namespace

void set_log_level(LogLevel level) { g_level.store(static_cast<int>(level)); }

LogLevel log_level_from_string(const std::string& name) {
  if (name == "debug") return LogLevel::Debug;
  if (name == "info") return LogLevel::Info;
  if (name == "warn") return LogLevel::Warn;
  if (name == "error") return LogLevel::Error;
  throw_usage("unknown log level '" + name + "' (expected debug|info|warn|error)");
}

void log(LogLevel level, std::string_view msg, std::string_view fields_json) {
  if (static_cast<int>(level) < g_level.load()) return;
  nlohmann::json j = {
      {"ts", iso8601_utc_now()},
      {"level", level_name(level)},
      {"msg", std::string(msg)},
  };
  if (!fields_json.empty()) {
    const nlohmann::json fields = nlohmann::json::parse(fields_json, nullptr, false);
    if (fields.is_object()) {
      for (auto it = fields.begin(); it != fields.end(); ++it) j[it.key()] = it.value();
    }
  }
  std::lock_guard<std::mutex> lock(g_mutex);
  std::cerr << j.dump() << "\n";
}

}  // namespace fidkit
