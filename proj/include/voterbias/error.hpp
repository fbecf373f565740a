#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace voterbias {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad input data (malformed dump, unreadable file). CLI maps it to exit code 2.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Fatal XML error. `byte_offset` is the position in the source stream.
class XmlParseError : public DataError {
 public:
  XmlParseError(const std::string& what, std::uint64_t byte_offset)
      : DataError(what + " at byte offset " + std::to_string(byte_offset)),
        byte_offset_(byte_offset) {}

  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::uint64_t byte_offset_;
};

/// Lookup of a post, question or user id that the store does not hold.
class UnknownIdError : public Error {
 public:
  using Error::Error;
};

/// Invalid arguments or configuration. CLI maps it to exit code 64.
class UsageError : public Error {
 public:
  using Error::Error;
};

class UnknownColumnError : public UsageError {
 public:
  explicit UnknownColumnError(const std::string& column)
      : UsageError("unknown column '" + column + "'"), column_(column) {}

  const std::string& column() const noexcept { return column_; }

 private:
  std::string column_;
};

/// Design matrix is rank deficient to working tolerance.
class SingularDesignError : public Error {
 public:
  SingularDesignError(const std::string& what, std::vector<std::string> columns)
      : Error(compose(what, columns)), columns_(std::move(columns)) {}

  const std::vector<std::string>& columns() const noexcept { return columns_; }

 private:
  static std::string compose(const std::string& what,
                             const std::vector<std::string>& columns) {
    std::string msg = what;
    if (!columns.empty()) {
      msg += " (offending columns:";
      for (const auto& c : columns) msg += " " + c;
      msg += ")";
    }
    return msg;
  }

  std::vector<std::string> columns_;
};

}  // namespace voterbias
