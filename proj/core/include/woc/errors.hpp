#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace woc {

// Each code maps to a distinct process exit status in the CLI.
enum class ErrorCode : int {
  Io = 3,
  MalformedRow = 4,
  UnknownRound = 5,
  NonPositivePrice = 6,
  NonPositiveInput = 7,
  AlphaOutOfRange = 8,
  EmptySubset = 9,
  NoRounds = 10,
  EmptySample = 11,
  TooFewPoints = 12,
  NoDecisiveEntries = 13,
  MissingFlag = 14,
  SpecInvalid = 15,
  ConfigInvalid = 16,
  InvalidArgument = 17,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& reason)
      : Error(ErrorCode::Io, path + ": " + reason), path_(path) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Row-indexed CSV diagnostic. `line` is 1-based and counts the header.
class MalformedRow : public Error {
 public:
  MalformedRow(std::size_t line, const std::string& reason)
      : Error(ErrorCode::MalformedRow,
              "malformed row at line " + std::to_string(line) + ": " + reason),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class UnknownRound : public Error {
 public:
  explicit UnknownRound(const std::string& round_id)
      : Error(ErrorCode::UnknownRound,
              "round '" + round_id + "' referenced by records has no truth"),
        round_id_(round_id) {}
  const std::string& round_id() const noexcept { return round_id_; }

 private:
  std::string round_id_;
};

class NonPositivePrice : public Error {
 public:
  NonPositivePrice(std::size_t line, const std::string& field)
      : Error(ErrorCode::NonPositivePrice,
              "non-positive price in field '" + field + "' at line " +
                  std::to_string(line)),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace woc
