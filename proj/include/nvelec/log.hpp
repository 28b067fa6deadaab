#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <utility>

namespace nvelec {

using WarningHandler = std::function<void(const std::string&)>;

namespace detail {
inline WarningHandler& warning_handler() {
  static WarningHandler h;
  return h;
}
inline std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

// Installs a sink for non-fatal diagnostics; warnings are dropped by default.
inline void set_warning_handler(WarningHandler h) {
  std::lock_guard<std::mutex> g(detail::warning_mutex());
  detail::warning_handler() = std::move(h);
}

inline void warn(const std::string& msg) {
  std::lock_guard<std::mutex> g(detail::warning_mutex());
  if (detail::warning_handler()) detail::warning_handler()(msg);
}

}  // namespace nvelec
