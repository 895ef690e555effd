#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dgt {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input bytes. `offset` is the byte position reported by the JSON reader.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// A record parsed fine but breaks a domain invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::string game_id, std::string field, const std::string& detail)
      : Error("game '" + game_id + "': " + field + ": " + detail),
        game_id_(std::move(game_id)),
        field_(std::move(field)) {}
  const std::string& game_id() const { return game_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string game_id_;
  std::string field_;
};

// Pipeline configuration problem; `path` is a JSON-pointer-like field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string path, const std::string& detail)
      : Error("config " + path + ": " + detail), path_(std::move(path)) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace dgt
