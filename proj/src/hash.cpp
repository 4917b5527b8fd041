#include "tempat/hash.hpp"

#include <array>
#include <bit>
#include <cstring>

namespace tempat {

Hasher& Hasher::bytes(std::span<const std::byte> data) {
  for (std::byte b : data) {
    state_ ^= static_cast<std::uint64_t>(b);
    state_ *= 0x100000001b3ULL;
  }
  return *this;
}

Hasher& Hasher::text(std::string_view s) {
  integer(static_cast<std::int64_t>(s.size()));
  return bytes(std::as_bytes(std::span(s.data(), s.size())));
}

Hasher& Hasher::integer(std::int64_t v) {
  auto raw = std::bit_cast<std::array<std::byte, sizeof(v)>>(v);
  return bytes(raw);
}

Hasher& Hasher::real(double v) {
  auto raw = std::bit_cast<std::array<std::byte, sizeof(v)>>(v);
  return bytes(raw);
}

Hasher& Hasher::reals(std::span<const double> v) {
  integer(static_cast<std::int64_t>(v.size()));
  return bytes(std::as_bytes(v));
}

Hasher& Hasher::matrix(const Matrix& m) {
  integer(m.rows());
  integer(m.cols());
  return bytes(std::as_bytes(std::span(m.data(), static_cast<std::size_t>(m.size()))));
}

std::string Hasher::hex() const {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  std::uint64_t v = state_;
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

}  // namespace tempat
