#pragma once

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rmvh/common.hpp"

namespace rmvh {

/// n binary codes of P bits, packed 64 bits per word. Bit value 1 encodes
/// the hash value +1 and 0 encodes -1.
class CodeMatrix {
 public:
  CodeMatrix() = default;
  CodeMatrix(Index count, Index bits);

  /// Sign of each entry of an n x P real matrix, with sign(0) = +1.
  static CodeMatrix from_real(const Matrix& embeddings);

  Index size() const { return count_; }
  Index bits() const { return bits_; }
  Index words_per_code() const { return words_; }

  /// +1 or -1.
  int sign(Index i, Index p) const {
    return (data_[static_cast<std::size_t>(i * words_ + p / 64)] >> (p % 64)) & 1u ? 1 : -1;
  }
  void set(Index i, Index p, int sign_value);

  std::span<const std::uint64_t> row(Index i) const {
    return {data_.data() + i * words_, static_cast<std::size_t>(words_)};
  }

  /// n x P matrix of +-1.
  Matrix to_signs() const;

  CodeMatrix rows(const std::vector<Index>& which) const;

  /// Text form: one line per code, P characters of '0' / '1'.
  std::string to_text() const;
  static CodeMatrix from_text(const std::string& text);

  friend bool operator==(const CodeMatrix&, const CodeMatrix&) = default;

 private:
  Index count_ = 0;
  Index bits_ = 0;
  Index words_ = 0;
  std::vector<std::uint64_t> data_;
};

inline Index hamming(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  Index d = 0;
  for (std::size_t w = 0; w < a.size(); ++w) d += std::popcount(a[w] ^ b[w]);
  return d;
}

}  // namespace rmvh
