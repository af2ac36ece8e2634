#include "tracephase/rational.hpp"

namespace tracephase {

Rational parse_rational(const std::string& s) {
  if (s.empty()) throw Error(ErrorCode::ParseError, "empty rational literal");
  auto ok_int = [](const std::string& t) {
    if (t.empty()) return false;
    size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };
  auto strip_plus = [](const std::string& t) { return t.size() && t[0] == '+' ? t.substr(1) : t; };
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) {
      if (!ok_int(s)) throw Error(ErrorCode::ParseError, "bad rational literal: " + s);
      return Rational(BigInt(strip_plus(s)));
    }
    std::string num = strip_plus(s.substr(0, slash)), den = strip_plus(s.substr(slash + 1));
    if (!ok_int(num) || !ok_int(den))
      throw Error(ErrorCode::ParseError, "bad rational literal: " + s);
    BigInt d(den);
    if (d == 0) throw Error(ErrorCode::ParseError, "zero denominator: " + s);
    return Rational(BigInt(num), d);
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "bad rational literal: " + s);
  }
}

std::string format_rational(const Rational& r) {
  BigInt num = boost::multiprecision::numerator(r);
  BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

RatMatrix RatMatrix::identity(int n) {
  RatMatrix m(n, n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1;
  return m;
}

RatMatrix RatMatrix::operator*(const RatMatrix& o) const {
  if (cols_ != o.rows_) throw Error(ErrorCode::DimensionMismatch, "matrix product shape");
  RatMatrix r(rows_, o.cols_);
  for (int i = 0; i < rows_; ++i)
    for (int l = 0; l < cols_; ++l) {
      const Rational& x = at(i, l);
      if (x == 0) continue;
      for (int j = 0; j < o.cols_; ++j) r.at(i, j) += x * o.at(l, j);
    }
  return r;
}

bool RatMatrix::operator==(const RatMatrix& o) const {
  return rows_ == o.rows_ && cols_ == o.cols_ && a_ == o.a_;
}

RatMatrix RatMatrix::inverse() const {
  if (rows_ != cols_) throw Error(ErrorCode::DimensionMismatch, "inverse of non-square");
  int n = rows_;
  RatMatrix work(*this), inv = identity(n);
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int r = col; r < n; ++r)
      if (work.at(r, col) != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) throw Error(ErrorCode::DegenerateBasis, "singular rational matrix");
    for (int j = 0; j < n; ++j) {
      std::swap(work.at(col, j), work.at(pivot, j));
      std::swap(inv.at(col, j), inv.at(pivot, j));
    }
    Rational p = work.at(col, col);
    for (int j = 0; j < n; ++j) {
      work.at(col, j) /= p;
      inv.at(col, j) /= p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      Rational f = work.at(r, col);
      if (f == 0) continue;
      for (int j = 0; j < n; ++j) {
        work.at(r, j) -= f * work.at(col, j);
        inv.at(r, j) -= f * inv.at(col, j);
      }
    }
  }
  return inv;
}

Rational RatMatrix::det() const {
  if (rows_ != cols_) throw Error(ErrorCode::DimensionMismatch, "det of non-square");
  int n = rows_;
  RatMatrix work(*this);
  Rational d = 1;
  for (int col = 0; col < n; ++col) {
    int pivot = -1;
    for (int r = col; r < n; ++r)
      if (work.at(r, col) != 0) {
        pivot = r;
        break;
      }
    if (pivot < 0) return 0;
    if (pivot != col) {
      d = -d;
      for (int j = 0; j < n; ++j) std::swap(work.at(col, j), work.at(pivot, j));
    }
    Rational p = work.at(col, col);
    d *= p;
    for (int r = col + 1; r < n; ++r) {
      Rational f = work.at(r, col) / p;
      if (f == 0) continue;
      for (int j = col; j < n; ++j) work.at(r, j) -= f * work.at(col, j);
    }
  }
  return d;
}

Rational RatMatrix::trace() const {
  Rational t = 0;
  for (int i = 0; i < std::min(rows_, cols_); ++i) t += at(i, i);
  return t;
}

std::vector<Rational> RatMatrix::apply(const std::vector<Rational>& v) const {
  if (int(v.size()) != cols_) throw Error(ErrorCode::DimensionMismatch, "matrix apply shape");
  std::vector<Rational> r(rows_);
  for (int i = 0; i < rows_; ++i)
    for (int j = 0; j < cols_; ++j) r[i] += at(i, j) * v[j];
  return r;
}

}  // namespace tracephase
