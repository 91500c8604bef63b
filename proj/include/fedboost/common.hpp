#pragma once

#include <charconv>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fedboost {

// ============================================================================
// Errors
// ============================================================================

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(std::string message) : std::runtime_error(std::move(message)) {}
};

// Invalid configuration or experiment spec (CLI maps these to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Dataset ingestion problems: missing columns, bad cells, empty files.
class IngestError : public Error {
 public:
  using Error::Error;
};

// Pipeline state problems (double isolation, empty feature group, bad plan).
class PipelineError : public Error {
 public:
  using Error::Error;
};

// Training contract violations (empty dataset, length mismatch).
class TrainError : public Error {
 public:
  using Error::Error;
};

enum class ParseCode {
  malformed_document,
  unknown_schema_version,
  duplicate_tree_id,
  dangling_child_index,
  invalid_structure,
};

// Model document parse/validation failure. Carries a distinct code per case.
class ParseError : public Error {
 public:
  ParseError(ParseCode code, std::string message)
      : Error(std::move(message)), code_(code) {}
  ParseCode code() const { return code_; }

 private:
  ParseCode code_;
};

enum class ProtocolCode {
  bad_version,
  bad_message_type,
  unexpected_field,
  missing_field,
  oversize_frame,
  round_mismatch,
  connection_closed,
  timeout,
  remote_error,
};

// Wire protocol violation (tcp transport and message codec).
class ProtocolError : public Error {
 public:
  ProtocolError(ProtocolCode code, std::string message)
      : Error(std::move(message)), code_(code) {}
  ProtocolCode code() const { return code_; }

 private:
  ProtocolCode code_;
};

enum class AggregationCode {
  duplicate_client,
  round_mismatch,
  empty_update,
};

class AggregationError : public Error {
 public:
  AggregationError(AggregationCode code, std::string message)
      : Error(std::move(message)), code_(code) {}
  AggregationCode code() const { return code_; }

 private:
  AggregationCode code_;
};

// Metric computation contract violations.
class MetricsError : public Error {
 public:
  using Error::Error;
};

// ============================================================================
// Real <-> string codec
// ============================================================================
//
// All reals in model documents, wire messages and metric CSVs are rendered
// with std::to_chars shortest round-trip form, so the exact binary value
// survives a serialize/parse cycle and re-serialization is byte-stable.

std::string real_to_string(double value);

// Parses a decimal string as double. Rejects trailing garbage, empty input,
// and non-finite spellings.
std::optional<double> parse_real(std::string_view text);

// ============================================================================
// Deterministic RNG
// ============================================================================
//
// std::mt19937 is fully pinned by the standard; the distributions are not,
// so bounded draws and gaussians are implemented here explicitly.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(static_cast<std::uint32_t>(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    const std::uint64_t hi = engine_() >> 5;   // 27 bits
    const std::uint64_t lo = engine_() >> 6;   // 26 bits
    return static_cast<double>((hi << 26) | lo) / 9007199254740992.0;  // 2^53
  }

  // Uniform integer in [0, n). Rejection sampling, exact and portable.
  std::uint32_t bounded(std::uint32_t n);

  // Gaussian via Box-Muller on explicit uniforms.
  double normal(double mean, double sd);

  // Fisher-Yates shuffle of [first, first+n) index range stored in `v`.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::uint32_t j = bounded(static_cast<std::uint32_t>(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937 engine_;
};

// ============================================================================
// Logging
// ============================================================================
//
// Verbosity comes from the FEDBOOST_LOG environment variable:
// "error" | "warn" | "info" (default) | "debug".

enum class LogLevel { error = 0, warn = 1, info = 2, debug = 3 };

LogLevel log_level();
void log(LogLevel level, const std::string& message);

inline void log_error(const std::string& m) { log(LogLevel::error, m); }
inline void log_warn(const std::string& m) { log(LogLevel::warn, m); }
inline void log_info(const std::string& m) { log(LogLevel::info, m); }
inline void log_debug(const std::string& m) { log(LogLevel::debug, m); }

}  // namespace fedboost
