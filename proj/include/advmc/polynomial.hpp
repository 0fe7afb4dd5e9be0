#pragma once

#include <gmpxx.h>

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "advmc/errors.hpp"

namespace advmc {

/// Exact rational coefficient. All symbolic arithmetic is exact; floating
/// point enters only at evaluation time.
using Rational = mpq_class;

using VarList = std::shared_ptr<const std::vector<std::string>>;
VarList make_var_list(std::vector<std::string> names);

/// Graded-lexicographic "greater" on exponent vectors: higher total degree
/// first, ties by lexicographic comparison. Used as the map comparator so
/// iteration yields the canonical printing order.
struct GrlexGreater {
  bool operator()(const std::vector<unsigned>& a, const std::vector<unsigned>& b) const;
};

/// Sparse multivariate polynomial over an ordered variable list. Zero
/// coefficients are never stored.
class Polynomial {
public:
  using TermMap = std::map<std::vector<unsigned>, Rational, GrlexGreater>;

  Polynomial();
  explicit Polynomial(VarList vars);

  static Polynomial constant(VarList vars, Rational value);
  static Polynomial constant(VarList vars, double value);
  static Polynomial variable(VarList vars, int index);

  const VarList& vars() const { return vars_; }
  int var_count() const { return static_cast<int>(vars_->size()); }
  const TermMap& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  bool is_constant() const;
  Rational constant_value() const;
  long total_degree() const;

  Polynomial operator-() const;
  Polynomial& operator+=(const Polynomial& rhs);
  Polynomial& operator-=(const Polynomial& rhs);
  friend Polynomial operator+(Polynomial lhs, const Polynomial& rhs);
  friend Polynomial operator-(Polynomial lhs, const Polynomial& rhs);
  friend Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs);
  friend bool operator==(const Polynomial& lhs, const Polynomial& rhs);

  Polynomial scaled(const Rational& factor) const;
  Polynomial derivative(int var) const;

  /// Nested Horner evaluation following the variable order.
  double evaluate(std::span<const double> point) const;

  /// Positive rational c such that (this / c) has coprime integer
  /// coefficients; 0 for the zero polynomial.
  Rational content() const;

  /// Coefficient of the graded-lex leading monomial; 0 for zero.
  Rational leading_coefficient() const;

  std::string to_string() const;

  void add_term(std::vector<unsigned> exps, Rational coeff);

private:
  VarList vars_;
  TermMap terms_;
};

/// Product with a monomial-count budget; throws DegreeOverflow when the
/// (conservative) estimate or the result exceeds `cap`.
Polynomial mul_checked(const Polynomial& lhs, const Polynomial& rhs, std::size_t cap);

/// Quotient of an exact multivariate division, or nullopt when `divisor`
/// does not divide `dividend` without remainder.
std::optional<Polynomial> divide_exact(const Polynomial& dividend, const Polynomial& divisor);

/// Quotient of two polynomials, normalized so the denominator is a primitive
/// integer polynomial with positive leading coefficient. num == den collapses
/// to 1, constant denominators are folded into the numerator.
class RationalFunction {
public:
  RationalFunction();
  explicit RationalFunction(Polynomial num);
  RationalFunction(Polynomial num, Polynomial den);

  static RationalFunction constant(VarList vars, Rational value);

  const Polynomial& num() const { return num_; }
  const Polynomial& den() const { return den_; }
  bool is_constant() const { return num_.is_constant() && den_.is_constant(); }

  friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b);
  friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b);
  friend bool operator==(const RationalFunction& a, const RationalFunction& b);

  RationalFunction derivative(int var) const;

  /// Throws DenominatorNearZero when |den(point)| <= 1e-14.
  double evaluate(std::span<const double> point) const;

  std::string to_string() const;

private:
  void normalize();

  Polynomial num_;
  Polynomial den_;
};

}  // namespace advmc
