#pragma once

#include <cstdint>
#include <vector>

namespace tracephase {

using MultiIndex = std::vector<int>;

inline int mi_total(const MultiIndex& a) {
  int t = 0;
  for (int e : a) t += e;
  return t;
}

// Graded-lex: first by total degree, then lexicographically on the entries.
// (0,2) < (1,1) < (2,0).
inline bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
  int ta = mi_total(a), tb = mi_total(b);
  if (ta != tb) return ta < tb;
  return a < b;
}

struct GradedLex {
  bool operator()(const MultiIndex& a, const MultiIndex& b) const {
    return graded_lex_less(a, b);
  }
};

// All alpha in n variables with min_total <= |alpha| <= max_total, ascending graded-lex.
std::vector<MultiIndex> enumerate_multi_indices(int n, int min_total, int max_total);

double factorial(int n);
double multi_factorial(const MultiIndex& a);
double binomial(int n, int k);

}  // namespace tracephase
