#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

namespace simgap {

// `level event key=value ...` on standard error; data never goes there.
void log_line(std::string_view level, std::string_view event,
              std::initializer_list<std::pair<std::string_view, std::string>>
                  fields = {});

inline void log_info(std::string_view event,
                     std::initializer_list<std::pair<std::string_view, std::string>>
                         fields = {}) {
    log_line("info", event, fields);
}

inline void log_warn(std::string_view event,
                     std::initializer_list<std::pair<std::string_view, std::string>>
                         fields = {}) {
    log_line("warn", event, fields);
}

} // namespace simgap
