#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace evdet {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data. `offset` is a byte offset (binary formats) or a
/// 1-based line/record number (text formats).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

/// Mismatched tensor/network/geometry shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

}  // namespace evdet
