#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hybridsum {

/// Base of every error the library throws. `kind()` is a short stable tag
/// used by the CLI to print one machine-parseable line per failure.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

/// Input bytes are not valid UTF-8.
class DecodeError : public Error {
public:
  DecodeError(std::size_t offset, const std::string& message)
      : Error("decode", message + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

private:
  std::size_t offset_;
};

/// Malformed record in a line-oriented file.
class FormatError : public Error {
public:
  FormatError(std::size_t line, const std::string& message)
      : Error("format", "line " + std::to_string(line) + ": " + message), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Invalid configuration value; `key_path()` is a JSON-pointer-like path.
class ConfigError : public Error {
public:
  ConfigError(std::string key_path, const std::string& message)
      : Error("config", key_path + ": " + message), key_path_(std::move(key_path)) {}

  const std::string& key_path() const noexcept { return key_path_; }

private:
  std::string key_path_;
};

/// Failure talking to an external generator/classifier process.
class BackendError : public Error {
public:
  BackendError(std::string request_id, const std::string& message)
      : Error("backend", "request '" + request_id + "': " + message),
        request_id_(std::move(request_id)) {}

  const std::string& request_id() const noexcept { return request_id_; }

private:
  std::string request_id_;
};

/// Violated precondition on an argument (empty split, bad ratios, ...).
class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& message) : Error("invalid_argument", message) {}
};

}  // namespace hybridsum
