#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <string>

namespace zerostat {

inline constexpr int kMaxDim = 3;

/// Exponent vector alpha of a chart monomial z_1^{alpha_1} ... z_m^{alpha_m}.
/// Entries past `m` are zero.
struct MonomialIndex {
  std::array<int, kMaxDim> alpha{};
  int m = 1;

  MonomialIndex() = default;
  explicit MonomialIndex(int dim) : m(dim) {}
  MonomialIndex(std::initializer_list<int> exps);

  int degree() const {
    int d = 0;
    for (int j = 0; j < m; ++j) d += alpha[j];
    return d;
  }
  int operator[](int j) const { return alpha[j]; }
  int& operator[](int j) { return alpha[j]; }

  std::string to_string() const;

  bool operator==(const MonomialIndex&) const = default;
};

/// Graded lexicographic order: total degree first, then lexicographic.
std::strong_ordering graded_lex(const MonomialIndex& a, const MonomialIndex& b);

struct GradedLexLess {
  bool operator()(const MonomialIndex& a, const MonomialIndex& b) const {
    return graded_lex(a, b) < 0;
  }
};

}  // namespace zerostat
