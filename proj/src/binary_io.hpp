#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "voterbias/error.hpp"

namespace voterbias::detail {

// Explicit little-endian encoding, independent of host byte order.
class ByteWriter {
 public:
  template <typename T>
    requires std::is_integral_v<T>
  void put(T value) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      out_.push_back(static_cast<char>(u & 0xFF));
      if constexpr (sizeof(T) > 1) u >>= 8;
    }
  }

  void put_f64(double value) { put(std::bit_cast<std::uint64_t>(value)); }

  void put_bytes(std::string_view bytes) { out_.append(bytes); }

  void put_string(std::string_view s) {
    put<std::uint64_t>(s.size());
    out_.append(s);
  }

  template <typename T, typename Get>
  void put_column(const std::vector<T>& rows, Get get) {
    for (const auto& r : rows) put(get(r));
  }

  const std::string& bytes() const noexcept { return out_; }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view in) : in_(in) {}

  template <typename T>
    requires std::is_integral_v<T>
  T get() {
    need(sizeof(T));
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(in_[pos_ + i])) << (8 * i));
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }

  std::string_view get_bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::string get_string() { return std::string(get_bytes(get<std::uint64_t>())); }

  std::size_t position() const noexcept { return pos_; }
  bool at_end() const noexcept { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw DataError("cache file truncated");
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace voterbias::detail
