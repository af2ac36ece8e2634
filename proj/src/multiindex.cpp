#include "tracephase/multiindex.hpp"

#include <algorithm>

namespace tracephase {

namespace {
void gen(int n, int remaining, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (int(cur.size()) == n - 1) {
    cur.push_back(remaining);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (int e = 0; e <= remaining; ++e) {
    cur.push_back(e);
    gen(n, remaining - e, cur, out);
    cur.pop_back();
  }
}
}  // namespace

std::vector<MultiIndex> enumerate_multi_indices(int n, int min_total, int max_total) {
  std::vector<MultiIndex> out;
  for (int t = min_total; t <= max_total; ++t) {
    std::vector<MultiIndex> level;
    MultiIndex cur;
    gen(n, t, cur, level);
    std::sort(level.begin(), level.end());
    out.insert(out.end(), level.begin(), level.end());
  }
  return out;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

double multi_factorial(const MultiIndex& a) {
  double f = 1.0;
  for (int e : a) f *= factorial(e);
  return f;
}

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * double(n - k + i) / double(i);
  return r;
}

}  // namespace tracephase
