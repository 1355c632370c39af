#include "mhdpinn/log.hpp"

#include <iostream>
#include <mutex>

namespace mhdpinn {

namespace {
std::mutex g_mutex;
LogSink g_sink;
}  // namespace

void set_log_sink(LogSink sink) {
  std::lock_guard lock(g_mutex);
  g_sink = std::move(sink);
}

void log_message(LogLevel level, const std::string& msg) {
  std::lock_guard lock(g_mutex);
  if (g_sink) {
    g_sink(level, msg);
    return;
  }
  std::cerr << (level == LogLevel::warning ? "warning: " : "") << msg << '\n';
}

}  // namespace mhdpinn
