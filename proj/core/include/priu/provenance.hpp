#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "priu/dataset.hpp"

namespace priu {

/// Product of provenance tokens with positive exponents, sorted by token id.
class Monomial {
 public:
  Monomial() = default;  // the empty monomial, i.e. 1_prov
  explicit Monomial(Token token, std::uint32_t exponent = 1);

  const std::vector<std::pair<Token, std::uint32_t>>& factors() const { return factors_; }
  std::uint32_t degree() const;
  std::uint32_t exponent_of(Token token) const;
  bool is_one() const { return factors_.empty(); }

  Monomial times(const Monomial& other, bool idempotent) const;

  auto operator<=>(const Monomial&) const = default;

 private:
  std::vector<std::pair<Token, std::uint32_t>> factors_;
};

/// Element of N[T] (or of its idempotent quotient): a finite map from monomials
/// to positive natural coefficients, kept in canonical order.
class ProvPolynomial {
 public:
  explicit ProvPolynomial(bool idempotent = true) : idempotent_(idempotent) {}

  static ProvPolynomial zero(bool idempotent = true) { return ProvPolynomial(idempotent); }
  static ProvPolynomial one(bool idempotent = true);
  static ProvPolynomial token(Token p, bool idempotent = true, std::uint32_t exponent = 1);
  static ProvPolynomial monomial(const Monomial& mono, std::uint64_t coeff, bool idempotent = true);

  bool idempotent() const { return idempotent_; }
  bool is_zero() const { return terms_.empty(); }
  bool is_one() const;
  std::size_t size() const { return terms_.size(); }
  const std::map<Monomial, std::uint64_t>& terms() const { return terms_; }
  std::uint64_t coefficient(const Monomial& mono) const;

  // Evaluate under a 0/1 assignment: number of monomials (with multiplicity)
  // whose tokens all survive.
  template <class Alive>
  std::uint64_t evaluate(const Alive& alive) const {
    std::uint64_t total = 0;
    for (const auto& [mono, coeff] : terms_) {
      bool keep = true;
      for (const auto& f : mono.factors())
        if (!alive(f.first)) {
          keep = false;
          break;
        }
      if (keep) total += coeff;
    }
    return total;
  }

  // Canonical text: monomials in canonical order joined by " + ", e.g. "2*p0^2*p1 + p3".
  std::string to_string() const;

  bool operator==(const ProvPolynomial& other) const {
    return idempotent_ == other.idempotent_ && terms_ == other.terms_;
  }
  bool operator<(const ProvPolynomial& other) const { return terms_ < other.terms_; }

  friend ProvPolynomial poly_add(const ProvPolynomial& a, const ProvPolynomial& b);
  friend ProvPolynomial poly_mul(const ProvPolynomial& a, const ProvPolynomial& b);

 private:
  void add_term(const Monomial& mono, std::uint64_t coeff);

  std::map<Monomial, std::uint64_t> terms_;
  bool idempotent_;
};

ProvPolynomial poly_add(const ProvPolynomial& a, const ProvPolynomial& b);
ProvPolynomial poly_mul(const ProvPolynomial& a, const ProvPolynomial& b);

/// Formal sum of (polynomial, matrix) terms with (p1*A1)(p2*A2) = (p1.p2)*(A1 A2).
///
/// Terms are merged per distinct polynomial; terms with a zero polynomial or an
/// all-zero matrix are dropped. `normalized()` rewrites every term onto a single
/// monomial (folding the natural coefficient into the matrix), which is the form
/// used for structural comparison and by the symbolic trainer.
class AnnotatedMatrix {
 public:
  AnnotatedMatrix(Eigen::Index rows, Eigen::Index cols, bool idempotent = true)
      : rows_(rows), cols_(cols), idempotent_(idempotent) {}

  static AnnotatedMatrix single(const ProvPolynomial& poly, Matrix value);

  Eigen::Index rows() const { return rows_; }
  Eigen::Index cols() const { return cols_; }
  bool idempotent() const { return idempotent_; }
  std::size_t size() const { return terms_.size(); }
  const std::map<ProvPolynomial, Matrix>& terms() const { return terms_; }

  void add_term(const ProvPolynomial& poly, const Matrix& value);
  AnnotatedMatrix scaled(double alpha) const;
  AnnotatedMatrix normalized() const;

  // Matrix attached to `mono` after normalization (zero matrix if absent).
  Matrix term_for(const Monomial& mono) const;

  // Zero-out specialization: tokens mapped to false become 0_prov, the rest 1_prov.
  template <class Alive>
  Matrix specialize(const Alive& alive) const {
    Matrix out = Matrix::Zero(rows_, cols_);
    for (const auto& [poly, value] : terms_) {
      std::uint64_t weight = poly.evaluate(alive);
      if (weight) out += static_cast<double>(weight) * value;
    }
    return out;
  }

  std::string to_string(int precision = 6) const;

 private:
  std::map<ProvPolynomial, Matrix> terms_;
  Eigen::Index rows_;
  Eigen::Index cols_;
  bool idempotent_;
};

// Maximum number of terms an annotated expression may hold before the symbolic
// layer refuses to continue.
inline constexpr std::size_t kDefaultTermCap = 1'000'000;

AnnotatedMatrix annot_add(const AnnotatedMatrix& a, const AnnotatedMatrix& b,
                          std::size_t term_cap = kDefaultTermCap);
AnnotatedMatrix annot_mul(const AnnotatedMatrix& a, const AnnotatedMatrix& b,
                          std::size_t term_cap = kDefaultTermCap);

/// Specialize with an explicit token -> {0_prov, 1_prov} assignment. Every token
/// appearing in `expr` must be assigned.
Matrix specialize(const AnnotatedMatrix& expr, const std::map<Token, bool>& assignment);

}  // namespace priu
