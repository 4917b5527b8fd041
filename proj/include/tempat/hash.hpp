#pragma once

#include "tempat/linalg.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tempat {

/// 64-bit FNV-1a. Used for stage fingerprints and context checks, not security.
class Hasher {
 public:
  Hasher& bytes(std::span<const std::byte> data);
  Hasher& text(std::string_view s);
  Hasher& integer(std::int64_t v);
  Hasher& real(double v);
  Hasher& reals(std::span<const double> v);
  Hasher& matrix(const Matrix& m);

  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

}  // namespace tempat
