#pragma once

#include "ddrecon/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ddrecon::detail {

// Little-endian encoder into a byte buffer.
class ByteWriter {
public:
  void bytes(std::string_view s) { buffer_.insert(buffer_.end(), s.begin(), s.end()); }

  template <typename T>
  void le(T value) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    const U bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      buffer_.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
  }

  const std::vector<char>& buffer() const { return buffer_; }

private:
  std::vector<char> buffer_;
};

// Bounds-checked little-endian decoder; running off the end is a typed
// `truncated` error.
class ByteReader {
public:
  ByteReader(const std::vector<char>& data, std::string what) : data_(data), what_(std::move(what)) {}

  std::string_view bytes(std::size_t n) {
    need(n);
    std::string_view out(data_.data() + pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t,
                                                    std::conditional_t<sizeof(T) == 2, std::uint16_t, std::uint8_t>>>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::size_t remaining() const { return data_.size() - pos_; }

  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) {
      throw Error(ErrorCode::truncated, what_ + ": truncated at byte " + std::to_string(pos_) + " (needed " +
                                            std::to_string(n) + " more, " + std::to_string(data_.size() - pos_) +
                                            " left)");
    }
  }

private:
  const std::vector<char>& data_;
  std::string what_;
  std::size_t pos_ = 0;
};

std::vector<char> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::vector<char>& bytes);

} // namespace ddrecon::detail
