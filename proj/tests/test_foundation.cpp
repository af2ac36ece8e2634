#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <complex>

#include "tracephase/multiindex.hpp"
#include "tracephase/polyroots.hpp"
#include "tracephase/rational.hpp"

using namespace tracephase;

TEST_CASE("rational parsing round-trips") {
  CHECK(parse_rational("2") == Rational(2));
  CHECK(parse_rational("-7/3") == Rational(-7, 3));
  CHECK(parse_rational("+4/8") == Rational(1, 2));
  CHECK(format_rational(Rational(-7, 3)) == "-7/3");
  CHECK(format_rational(Rational(4)) == "4");
  CHECK(to_double(Rational(1, 4)) == 0.25);
  CHECK_THROWS_AS(parse_rational("1.5"), Error);
  CHECK_THROWS_AS(parse_rational("1/0"), Error);
  CHECK_THROWS_AS(parse_rational(""), Error);
}

TEST_CASE("exact matrix inverse and determinant") {
  RatMatrix m(2, 2);
  m.at(0, 0) = 1;
  m.at(0, 1) = 2;
  m.at(1, 0) = 3;
  m.at(1, 1) = 4;
  CHECK(m.det() == Rational(-2));
  RatMatrix inv = m.inverse();
  CHECK((m * inv) == RatMatrix::identity(2));
  CHECK(inv.at(0, 0) == Rational(-2));
  CHECK(inv.at(0, 1) == Rational(1));

  RatMatrix sing(2, 2);
  sing.at(0, 0) = 1;
  sing.at(1, 0) = 1;
  CHECK_THROWS_AS(sing.inverse(), Error);
  CHECK(sing.det() == Rational(0));
}

TEST_CASE("polynomial roots: quadratic and cubic against closed forms") {
  // t^2 - 2
  auto r = poly_roots({-2.0, 0.0, 1.0});
  std::sort(r.begin(), r.end(),
            [](auto a, auto b) { return a.real() < b.real(); });
  CHECK(std::abs(r[0] - std::complex<double>(-std::sqrt(2.0), 0)) < 1e-12);
  CHECK(std::abs(r[1] - std::complex<double>(std::sqrt(2.0), 0)) < 1e-12);

  // t^3 - 2: one real cbrt(2), conjugate pair at cbrt(2)*exp(+-2pi i/3)
  auto c = poly_roots({-2.0, 0.0, 0.0, 1.0});
  double cb = std::cbrt(2.0);
  int real_hits = 0, cplx_hits = 0;
  for (auto z : c) {
    if (std::abs(z - std::complex<double>(cb, 0)) < 1e-12) ++real_hits;
    if (std::abs(z - std::complex<double>(-cb / 2, cb * std::sqrt(3.0) / 2)) < 1e-12) ++cplx_hits;
    if (std::abs(z - std::complex<double>(-cb / 2, -cb * std::sqrt(3.0) / 2)) < 1e-12) ++cplx_hits;
  }
  CHECK(real_hits == 1);
  CHECK(cplx_hits == 2);

  CHECK_THROWS_AS(poly_roots({1.0}), Error);
}

TEST_CASE("Newton polish reaches residual target on a wilkinson-ish product") {
  // (t-1)(t-2)(t-3)(t-4) expanded: 24 - 50t + 35t^2 - 10t^3 + t^4
  std::vector<double> p{24.0, -50.0, 35.0, -10.0, 1.0};
  auto r = poly_roots(p);
  for (auto z : r) CHECK(std::abs(poly_eval(p, z)) < 1e-9);
}

TEST_CASE("graded-lex enumeration order and helpers") {
  auto mis = enumerate_multi_indices(2, 1, 2);
  REQUIRE(mis.size() == 5);
  CHECK(mis[0] == MultiIndex{0, 1});
  CHECK(mis[1] == MultiIndex{1, 0});
  CHECK(mis[2] == MultiIndex{0, 2});
  CHECK(mis[3] == MultiIndex{1, 1});
  CHECK(mis[4] == MultiIndex{2, 0});
  CHECK(graded_lex_less({0, 2}, {1, 1}));
  CHECK(graded_lex_less({1, 1}, {2, 0}));
  CHECK(!graded_lex_less({2, 0}, {0, 2}));
  CHECK(graded_lex_less({2, 0}, {0, 3}));

  CHECK(factorial(5) == 120.0);
  CHECK(multi_factorial({3, 2}) == 12.0);
  CHECK(binomial(5, 2) == 10.0);
  CHECK(binomial(3, 5) == 0.0);

  auto n1 = enumerate_multi_indices(1, 2, 4);
  REQUIRE(n1.size() == 3);
  CHECK(n1[0] == MultiIndex{2});

  // count of |alpha| = r in n vars is binom(n+r-1, r)
  auto n3r3 = enumerate_multi_indices(3, 3, 3);
  CHECK(n3r3.size() == size_t(binomial(3 + 3 - 1, 3)));
}
