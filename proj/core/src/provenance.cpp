#include "priu/provenance.hpp"

#include <algorithm>
#include <sstream>

#include "priu/error.hpp"

namespace priu {

Monomial::Monomial(Token token, std::uint32_t exponent) {
  if (exponent > 0) factors_.emplace_back(token, exponent);
}

std::uint32_t Monomial::degree() const {
  std::uint32_t d = 0;
  for (const auto& f : factors_) d += f.second;
  return d;
}

std::uint32_t Monomial::exponent_of(Token token) const {
  for (const auto& f : factors_)
    if (f.first == token) return f.second;
  return 0;
}

Monomial Monomial::times(const Monomial& other, bool idempotent) const {
  Monomial out;
  auto a = factors_.begin();
  auto b = other.factors_.begin();
  while (a != factors_.end() || b != other.factors_.end()) {
    if (b == other.factors_.end() || (a != factors_.end() && a->first < b->first)) {
      out.factors_.push_back(*a++);
    } else if (a == factors_.end() || b->first < a->first) {
      out.factors_.push_back(*b++);
    } else {
      out.factors_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  if (idempotent)
    for (auto& f : out.factors_) f.second = 1;
  return out;
}

ProvPolynomial ProvPolynomial::one(bool idempotent) {
  ProvPolynomial p(idempotent);
  p.terms_.emplace(Monomial{}, 1);
  return p;
}

ProvPolynomial ProvPolynomial::token(Token t, bool idempotent, std::uint32_t exponent) {
  return monomial(Monomial(t, idempotent ? std::min<std::uint32_t>(exponent, 1) : exponent), 1,
                  idempotent);
}

ProvPolynomial ProvPolynomial::monomial(const Monomial& mono, std::uint64_t coeff, bool idempotent) {
  ProvPolynomial p(idempotent);
  Monomial m = idempotent ? mono.times(Monomial{}, true) : mono;
  p.add_term(m, coeff);
  return p;
}

bool ProvPolynomial::is_one() const {
  return terms_.size() == 1 && terms_.begin()->first.is_one() && terms_.begin()->second == 1;
}

std::uint64_t ProvPolynomial::coefficient(const Monomial& mono) const {
  auto it = terms_.find(mono);
  return it == terms_.end() ? 0 : it->second;
}

void ProvPolynomial::add_term(const Monomial& mono, std::uint64_t coeff) {
  if (coeff == 0) return;
  terms_[mono] += coeff;
}

std::string ProvPolynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [mono, coeff] : terms_) {
    if (!first) os << " + ";
    first = false;
    if (mono.is_one()) {
      os << coeff;
      continue;
    }
    if (coeff != 1) os << coeff << "*";
    bool first_factor = true;
    for (const auto& [tok, exp] : mono.factors()) {
      if (!first_factor) os << "*";
      first_factor = false;
      os << "p" << tok;
      if (exp > 1) os << "^" << exp;
    }
  }
  return os.str();
}

ProvPolynomial poly_add(const ProvPolynomial& a, const ProvPolynomial& b) {
  require(a.idempotent_ == b.idempotent_, ErrorCode::kMismatch,
          "cannot add polynomials from different semirings");
  ProvPolynomial out = a;
  for (const auto& [mono, coeff] : b.terms_) out.add_term(mono, coeff);
  return out;
}

ProvPolynomial poly_mul(const ProvPolynomial& a, const ProvPolynomial& b) {
  require(a.idempotent_ == b.idempotent_, ErrorCode::kMismatch,
          "cannot multiply polynomials from different semirings");
  ProvPolynomial out(a.idempotent_);
  for (const auto& [ma, ca] : a.terms_)
    for (const auto& [mb, cb] : b.terms_) out.add_term(ma.times(mb, a.idempotent_), ca * cb);
  return out;
}

AnnotatedMatrix AnnotatedMatrix::single(const ProvPolynomial& poly, Matrix value) {
  AnnotatedMatrix out(value.rows(), value.cols(), poly.idempotent());
  out.add_term(poly, value);
  return out;
}

void AnnotatedMatrix::add_term(const ProvPolynomial& poly, const Matrix& value) {
  require(poly.idempotent() == idempotent_, ErrorCode::kMismatch,
          "annotation semiring does not match the expression");
  require(value.rows() == rows_ && value.cols() == cols_, ErrorCode::kMismatch,
          "annotated term shape mismatch");
  if (poly.is_zero()) return;
  auto it = terms_.find(poly);
  if (it == terms_.end()) {
    if (!value.isZero(0.0)) terms_.emplace(poly, value);
    return;
  }
  it->second += value;
  if (it->second.isZero(0.0)) terms_.erase(it);
}

AnnotatedMatrix AnnotatedMatrix::scaled(double alpha) const {
  AnnotatedMatrix out(rows_, cols_, idempotent_);
  if (alpha == 0.0) return out;
  for (const auto& [poly, value] : terms_) out.terms_.emplace(poly, alpha * value);
  return out;
}

AnnotatedMatrix AnnotatedMatrix::normalized() const {
  AnnotatedMatrix out(rows_, cols_, idempotent_);
  for (const auto& [poly, value] : terms_)
    for (const auto& [mono, coeff] : poly.terms())
      out.add_term(ProvPolynomial::monomial(mono, 1, idempotent_), static_cast<double>(coeff) * value);
  return out;
}

Matrix AnnotatedMatrix::term_for(const Monomial& mono) const {
  Matrix out = Matrix::Zero(rows_, cols_);
  for (const auto& [poly, value] : terms_) {
    std::uint64_t c = poly.coefficient(mono);
    if (c) out += static_cast<double>(c) * value;
  }
  return out;
}

std::string AnnotatedMatrix::to_string(int precision) const {
  if (terms_.empty()) return "0";
  std::ostringstream os;
  os.precision(precision);
  bool first = true;
  for (const auto& [poly, value] : terms_) {
    if (!first) os << " + ";
    first = false;
    os << "(" << poly.to_string() << ")*[";
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
      if (r) os << "; ";
      for (Eigen::Index c = 0; c < value.cols(); ++c) {
        if (c) os << ", ";
        os << value(r, c);
      }
    }
    os << "]";
  }
  return os.str();
}

namespace {

void check_cap(const AnnotatedMatrix& m, std::size_t cap) {
  require(m.size() <= cap, ErrorCode::kRefused,
          "annotated expression exceeds the term cap of " + std::to_string(cap));
}

}  // namespace

AnnotatedMatrix annot_add(const AnnotatedMatrix& a, const AnnotatedMatrix& b, std::size_t term_cap) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::kMismatch,
          "annotated addition shape mismatch");
  require(a.idempotent() == b.idempotent(), ErrorCode::kMismatch,
          "annotated addition semiring mismatch");
  AnnotatedMatrix out = a;
  for (const auto& [poly, value] : b.terms()) {
    out.add_term(poly, value);
    check_cap(out, term_cap);
  }
  return out;
}

AnnotatedMatrix annot_mul(const AnnotatedMatrix& a, const AnnotatedMatrix& b, std::size_t term_cap) {
  require(a.cols() == b.rows(), ErrorCode::kMismatch, "annotated product inner dimension mismatch");
  require(a.idempotent() == b.idempotent(), ErrorCode::kMismatch,
          "annotated product semiring mismatch");
  AnnotatedMatrix out(a.rows(), b.cols(), a.idempotent());
  for (const auto& [pa, ma] : a.terms())
    for (const auto& [pb, mb] : b.terms()) {
      out.add_term(poly_mul(pa, pb), ma * mb);
      check_cap(out, term_cap);
    }
  return out;
}

Matrix specialize(const AnnotatedMatrix& expr, const std::map<Token, bool>& assignment) {
  for (const auto& [poly, value] : expr.terms())
    for (const auto& [mono, coeff] : poly.terms())
      for (const auto& f : mono.factors())
        require(assignment.count(f.first) > 0, ErrorCode::kConfig,
                "token p" + std::to_string(f.first) + " has no assignment");
  return expr.specialize([&](Token t) { return assignment.at(t); });
}

}  // namespace priu
