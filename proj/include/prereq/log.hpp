#ifndef PREREQ_LOG_HPP
#define PREREQ_LOG_HPP

#include <string>

namespace prereq {

enum class LogLevel { Error = 0, Info = 1, Debug = 2 };

// Level comes from the PREREQ_LOG environment variable {error,info,debug};
// defaults to info.
LogLevel log_level();
void set_log_level(LogLevel level);

void log_error(const std::string& msg);
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

}  // namespace prereq

#endif
