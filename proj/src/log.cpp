#include "prereq/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace prereq {

namespace {

LogLevel level_from_env() {
  const char* env = std::getenv("PREREQ_LOG");
  if (env == nullptr) return LogLevel::Info;
  if (std::strcmp(env, "error") == 0) return LogLevel::Error;
  if (std::strcmp(env, "debug") == 0) return LogLevel::Debug;
  return LogLevel::Info;
}

LogLevel g_level = level_from_env();

}  // namespace

LogLevel log_level() { return g_level; }
void set_log_level(LogLevel level) { g_level = level; }

void log_error(const std::string& msg) {
  std::fprintf(stderr, "[error] %s\n", msg.c_str());
}

void log_info(const std::string& msg) {
  if (g_level >= LogLevel::Info) std::fprintf(stderr, "[info] %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
  if (g_level >= LogLevel::Debug) std::fprintf(stderr, "[debug] %s\n", msg.c_str());
}

}  // namespace prereq
