#include "simgap/log.hpp"

#include <iostream>

namespace simgap {

void log_line(std::string_view level, std::string_view event,
              std::initializer_list<std::pair<std::string_view, std::string>>
                  fields) {
    std::cerr << level << ' ' << event;
    for (const auto& [key, value] : fields)
        std::cerr << ' ' << key << '=' << value;
    std::cerr << '\n';
}

} // namespace simgap
