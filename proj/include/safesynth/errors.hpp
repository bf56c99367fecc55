#pragma once

#include <stdexcept>
#include <string>

namespace safesynth {

/// Invalid or incomplete configuration; `key` is the offending key path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Malformed input file; `line` is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

/// Simulator failure while collecting sample `index`.
class CollectionError : public std::runtime_error {
 public:
  CollectionError(long index, const std::string& what)
      : std::runtime_error("sample " + std::to_string(index) + ": " + what), index_(index) {}
  long index() const { return index_; }

 private:
  long index_;
};

/// The posterior equation has no sign change on the search bracket.
class VacuousBoundError : public std::runtime_error {
 public:
  VacuousBoundError(int sign_low, int sign_high)
      : std::runtime_error("posterior bound vacuous for these inputs (g(lower) sign " +
                           std::to_string(sign_low) + ", g(upper) sign " +
                           std::to_string(sign_high) + ")"),
        sign_low_(sign_low),
        sign_high_(sign_high) {}
  int sign_low() const { return sign_low_; }
  int sign_high() const { return sign_high_; }

 private:
  int sign_low_;
  int sign_high_;
};

/// The sample-size planner cannot produce a pair.
class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace safesynth
