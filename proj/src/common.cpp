#include "fedboost/common.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace fedboost {

std::string real_to_string(double value) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

std::optional<double> parse_real(std::string_view text) {
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc{} || res.ptr != end) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::uint32_t Rng::bounded(std::uint32_t n) {
  if (n <= 1) return 0;
  // Reject draws from the tail that would bias the modulo.
  const std::uint32_t threshold = static_cast<std::uint32_t>(-n) % n;  // 2^32 mod n
  for (;;) {
    const std::uint32_t r = engine_();
    if (r >= threshold) return r % n;
  }
}

double Rng::normal(double mean, double sd) {
  // Box-Muller; u1 shifted away from zero so log() stays finite.
  const double u1 = (static_cast<double>(engine_()) + 0.5) / 4294967296.0;
  const double u2 = (static_cast<double>(engine_()) + 0.5) / 4294967296.0;
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 6.283185307179586476925286766559 * u2;
  return mean + sd * radius * std::cos(angle);
}

LogLevel log_level() {
  static const LogLevel level = [] {
    const char* env = std::getenv("FEDBOOST_LOG");
    if (env == nullptr) return LogLevel::info;
    if (std::strcmp(env, "error") == 0) return LogLevel::error;
    if (std::strcmp(env, "warn") == 0) return LogLevel::warn;
    if (std::strcmp(env, "debug") == 0) return LogLevel::debug;
    return LogLevel::info;
  }();
  return level;
}

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static std::mutex mu;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::lock_guard<std::mutex> lock(mu);
  std::fprintf(stderr, "[fedboost:%s] %s\n", names[static_cast<int>(level)], message.c_str());
}

}  // namespace fedboost
