// Process-wide warning sink

#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>

namespace spinecho {

namespace detail {
inline void print_warning(std::string_view msg) { std::cerr << "warning: " << msg << '\n'; }

struct WarningSink {
    std::mutex mutex;
    std::function<void(std::string_view)> handler = print_warning;
};

inline WarningSink& warning_sink() {
    static WarningSink sink;
    return sink;
}
}  // namespace detail

inline void set_warning_handler(std::function<void(std::string_view)> handler) {
    auto& sink = detail::warning_sink();
    std::lock_guard lock(sink.mutex);
    sink.handler = std::move(handler);
}

inline void reset_warning_handler() { set_warning_handler(detail::print_warning); }

inline void warn(std::string_view message) {
    auto& sink = detail::warning_sink();
    std::lock_guard lock(sink.mutex);
    if (sink.handler) sink.handler(message);
}

}  // namespace spinecho
