#pragma once

#include <functional>
#include <string>

namespace mhdpinn {

enum class LogLevel { info, warning };

using LogSink = std::function<void(LogLevel, const std::string&)>;

/// Replaces the sink (default: stderr). Passing an empty function restores it.
void set_log_sink(LogSink sink);

void log_message(LogLevel level, const std::string& msg);
inline void log_info(const std::string& msg) { log_message(LogLevel::info, msg); }
inline void log_warning(const std::string& msg) { log_message(LogLevel::warning, msg); }

}  // namespace mhdpinn
