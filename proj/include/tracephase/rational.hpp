#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace tracephase {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

enum class ErrorCode {
  NonMonic,
  RepeatedRoots,
  EmptyPolynomial,
  DimensionMismatch,
  BadEmbeddingIndex,
  DegenerateBasis,
  RealEmbedding,
  ZeroVector,
  NotUnivariate,
  DimensionTooLarge,
  NotConjugationClosed,
  EmptySet,
  BudgetExceeded,
  RankDeficient,
  DegenerateQ,
  ConfigInvalid,
  ExperimentFailed,
  CalibrationUnstable,
  IllConditioned,
  ParseError,
};

struct Error : std::runtime_error {
  ErrorCode code;
  Error(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Accepts "p", "-p", "p/q" with arbitrary-precision integers.
Rational parse_rational(const std::string& s);
std::string format_rational(const Rational& r);
double to_double(const Rational& r);

// Dense exact-rational matrix, row-major. Small sizes only (k <= 8).
class RatMatrix {
 public:
  RatMatrix() : rows_(0), cols_(0) {}
  RatMatrix(int rows, int cols) : rows_(rows), cols_(cols), a_(size_t(rows) * cols) {}
  static RatMatrix identity(int n);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Rational& at(int i, int j) { return a_[size_t(i) * cols_ + j]; }
  const Rational& at(int i, int j) const { return a_[size_t(i) * cols_ + j]; }

  RatMatrix operator*(const RatMatrix& o) const;
  bool operator==(const RatMatrix& o) const;
  // Gauss-Jordan with exact pivoting; throws Error(DegenerateBasis) if singular.
  RatMatrix inverse() const;
  Rational det() const;
  Rational trace() const;
  std::vector<Rational> apply(const std::vector<Rational>& v) const;

 private:
  int rows_, cols_;
  std::vector<Rational> a_;
};

}  // namespace tracephase
