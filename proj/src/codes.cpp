#include "rmvh/codes.hpp"

#include <algorithm>
#include <sstream>
#include <string>

namespace rmvh {

CodeMatrix::CodeMatrix(Index count, Index bits)
    : count_(count), bits_(bits), words_((bits + 63) / 64),
      data_(static_cast<std::size_t>(count * ((bits + 63) / 64)), 0) {
  require(count >= 0 && bits >= 1, "CodeMatrix: need at least one bit per code");
}

CodeMatrix CodeMatrix::from_real(const Matrix& embeddings) {
  require(embeddings.allFinite(), "CodeMatrix::from_real: non-finite embedding");
  CodeMatrix c(embeddings.rows(), embeddings.cols());
  for (Index i = 0; i < embeddings.rows(); ++i)
    for (Index p = 0; p < embeddings.cols(); ++p) c.set(i, p, embeddings(i, p) >= 0.0 ? 1 : -1);
  return c;
}

void CodeMatrix::set(Index i, Index p, int sign_value) {
  auto& word = data_[static_cast<std::size_t>(i * words_ + p / 64)];
  const std::uint64_t mask = std::uint64_t{1} << (p % 64);
  if (sign_value > 0) {
    word |= mask;
  } else {
    word &= ~mask;
  }
}

Matrix CodeMatrix::to_signs() const {
  Matrix out(count_, bits_);
  for (Index i = 0; i < count_; ++i)
    for (Index p = 0; p < bits_; ++p) out(i, p) = sign(i, p);
  return out;
}

CodeMatrix CodeMatrix::rows(const std::vector<Index>& which) const {
  CodeMatrix out(static_cast<Index>(which.size()), bits_);
  for (std::size_t r = 0; r < which.size(); ++r) {
    require(which[r] >= 0 && which[r] < count_, "CodeMatrix::rows: index out of range");
    auto src = row(which[r]);
    std::copy(src.begin(), src.end(), out.data_.begin() + static_cast<std::ptrdiff_t>(r * words_));
  }
  return out;
}

std::string CodeMatrix::to_text() const {
  std::string out;
  out.reserve(static_cast<std::size_t>(count_ * (bits_ + 1)));
  for (Index i = 0; i < count_; ++i) {
    for (Index p = 0; p < bits_; ++p) out.push_back(sign(i, p) > 0 ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

CodeMatrix CodeMatrix::from_text(const std::string& text) {
  std::istringstream in(text);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw FormatError("code file holds no codes");
  const auto bits = static_cast<Index>(lines.front().size());
  CodeMatrix c(static_cast<Index>(lines.size()), bits);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (static_cast<Index>(lines[i].size()) != bits) {
      throw FormatError("code line " + std::to_string(i + 1) + " has " + std::to_string(lines[i].size()) +
                        " bits, expected " + std::to_string(bits));
    }
    for (Index p = 0; p < bits; ++p) {
      const char ch = lines[i][static_cast<std::size_t>(p)];
      if (ch != '0' && ch != '1') throw FormatError("code line " + std::to_string(i + 1) + ": bad character");
      c.set(static_cast<Index>(i), p, ch == '1' ? 1 : -1);
    }
  }
  return c;
}

}  // namespace rmvh
