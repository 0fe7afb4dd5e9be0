#include "advmc/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace advmc {

namespace {

const VarList& empty_vars() {
  static const VarList empty = std::make_shared<const std::vector<std::string>>();
  return empty;
}

void require_same_vars(const Polynomial& a, const Polynomial& b) {
  if (a.vars() == b.vars()) return;
  if (*a.vars() == *b.vars()) return;
  throw std::logic_error("polynomial operands use different variable lists");
}

long degree_of(const std::vector<unsigned>& exps) {
  long d = 0;
  for (unsigned e : exps) d += e;
  return d;
}

}  // namespace

VarList make_var_list(std::vector<std::string> names) {
  return std::make_shared<const std::vector<std::string>>(std::move(names));
}

bool GrlexGreater::operator()(const std::vector<unsigned>& a, const std::vector<unsigned>& b) const {
  long da = degree_of(a), db = degree_of(b);
  if (da != db) return da > db;
  return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

Polynomial::Polynomial() : vars_(empty_vars()) {}

Polynomial::Polynomial(VarList vars) : vars_(std::move(vars)) {}

Polynomial Polynomial::constant(VarList vars, Rational value) {
  Polynomial p(std::move(vars));
  if (value != 0) p.terms_.emplace(std::vector<unsigned>(p.vars_->size(), 0), std::move(value));
  return p;
}

Polynomial Polynomial::constant(VarList vars, double value) {
  return constant(std::move(vars), Rational(value));
}

Polynomial Polynomial::variable(VarList vars, int index) {
  Polynomial p(std::move(vars));
  if (index < 0 || index >= p.var_count()) throw std::logic_error("variable index out of range");
  std::vector<unsigned> exps(p.vars_->size(), 0);
  exps[index] = 1;
  p.terms_.emplace(std::move(exps), Rational(1));
  return p;
}

bool Polynomial::is_constant() const {
  if (terms_.empty()) return true;
  return terms_.size() == 1 && degree_of(terms_.begin()->first) == 0;
}

Rational Polynomial::constant_value() const {
  if (terms_.empty()) return Rational(0);
  if (!is_constant()) throw std::logic_error("constant_value on non-constant polynomial");
  return terms_.begin()->second;
}

long Polynomial::total_degree() const {
  return terms_.empty() ? 0 : degree_of(terms_.begin()->first);
}

void Polynomial::add_term(std::vector<unsigned> exps, Rational coeff) {
  if (exps.size() != vars_->size()) throw std::logic_error("exponent vector length mismatch");
  coeff.canonicalize();  // callers may pass p/q with common factors
  auto [it, inserted] = terms_.emplace(std::move(exps), coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0) terms_.erase(it);
  } else if (it->second == 0) {
    terms_.erase(it);
  }
}

Polynomial Polynomial::operator-() const {
  Polynomial out(vars_);
  for (const auto& [e, c] : terms_) out.terms_.emplace(e, -c);
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
  require_same_vars(*this, rhs);
  for (const auto& [e, c] : rhs.terms_) add_term(e, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
  require_same_vars(*this, rhs);
  for (const auto& [e, c] : rhs.terms_) add_term(e, -c);
  return *this;
}

Polynomial operator+(Polynomial lhs, const Polynomial& rhs) {
  lhs += rhs;
  return lhs;
}

Polynomial operator-(Polynomial lhs, const Polynomial& rhs) {
  lhs -= rhs;
  return lhs;
}

Polynomial operator*(const Polynomial& lhs, const Polynomial& rhs) {
  require_same_vars(lhs, rhs);
  Polynomial out(lhs.vars_);
  std::vector<unsigned> exps(lhs.vars_->size());
  for (const auto& [ea, ca] : lhs.terms_) {
    for (const auto& [eb, cb] : rhs.terms_) {
      for (size_t i = 0; i < exps.size(); ++i) exps[i] = ea[i] + eb[i];
      out.add_term(exps, ca * cb);
    }
  }
  return out;
}

bool operator==(const Polynomial& lhs, const Polynomial& rhs) {
  return *lhs.vars_ == *rhs.vars_ && lhs.terms_ == rhs.terms_;
}

Polynomial Polynomial::scaled(const Rational& factor) const {
  Polynomial out(vars_);
  if (factor == 0) return out;
  for (const auto& [e, c] : terms_) out.terms_.emplace(e, c * factor);
  return out;
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0 || var >= var_count()) throw std::logic_error("variable index out of range");
  Polynomial out(vars_);
  for (const auto& [e, c] : terms_) {
    if (e[var] == 0) continue;
    std::vector<unsigned> exps = e;
    exps[var] -= 1;
    out.terms_.emplace(std::move(exps), c * static_cast<long>(e[var]));
  }
  return out;
}

namespace {

double pow_double(double x, unsigned e) {
  double acc = 1.0;
  while (e > 0) {
    if (e & 1u) acc *= x;
    x *= x;
    e >>= 1u;
  }
  return acc;
}

// Horner by successive variables: split the term block on the exponent of
// `var`, evaluate each sub-block recursively, then fold with powers of the
// variable from highest exponent down.
double eval_block(const std::vector<const std::pair<const std::vector<unsigned>, Rational>*>& block,
                  size_t var, std::span<const double> point) {
  if (block.empty()) return 0.0;
  if (var == point.size()) {
    double acc = 0.0;
    for (const auto* term : block) acc += term->second.get_d();
    return acc;
  }
  std::map<unsigned, std::vector<const std::pair<const std::vector<unsigned>, Rational>*>,
           std::greater<unsigned>>
      groups;
  for (const auto* term : block) groups[term->first[var]].push_back(term);
  double acc = 0.0;
  unsigned prev_exp = 0;
  bool first = true;
  for (const auto& [exp, sub] : groups) {
    if (first) {
      acc = eval_block(sub, var + 1, point);
      prev_exp = exp;
      first = false;
      continue;
    }
    acc = acc * pow_double(point[var], prev_exp - exp) + eval_block(sub, var + 1, point);
    prev_exp = exp;
  }
  return acc * pow_double(point[var], prev_exp);
}

}  // namespace

double Polynomial::evaluate(std::span<const double> point) const {
  if (point.size() != vars_->size())
    fail(Errc::MissingVariable, "expected " + std::to_string(vars_->size()) + " values, got " +
                                    std::to_string(point.size()));
  std::vector<const std::pair<const std::vector<unsigned>, Rational>*> block;
  block.reserve(terms_.size());
  for (const auto& term : terms_) block.push_back(&term);
  return eval_block(block, 0, point);
}

Rational Polynomial::content() const {
  if (terms_.empty()) return Rational(0);
  mpz_class num_gcd = 0;
  mpz_class den_lcm = 1;
  for (const auto& [e, c] : terms_) {
    num_gcd = gcd(num_gcd, c.get_num());
    den_lcm = lcm(den_lcm, c.get_den());
  }
  Rational content(num_gcd, den_lcm);
  content.canonicalize();
  return abs(content);
}

Rational Polynomial::leading_coefficient() const {
  return terms_.empty() ? Rational(0) : terms_.begin()->second;
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::ostringstream out;
  bool first = true;
  for (const auto& [exps, coeff] : terms_) {
    std::string mono;
    for (size_t i = 0; i < exps.size(); ++i) {
      if (exps[i] == 0) continue;
      if (!mono.empty()) mono += "*";
      mono += (*vars_)[i];
      if (exps[i] > 1) mono += "^" + std::to_string(exps[i]);
    }
    Rational a = abs(coeff);
    std::string abs_str = a.get_str();
    if (first) {
      if (mono.empty()) {
        out << coeff.get_str();
      } else if (coeff == 1) {
        out << mono;
      } else if (coeff == -1) {
        out << "-" << mono;
      } else if (coeff > 0) {
        out << abs_str << "*" << mono;
      } else {
        out << "(" << coeff.get_str() << ")*" << mono;
      }
      first = false;
      continue;
    }
    out << (coeff > 0 ? " + " : " - ");
    if (mono.empty()) out << abs_str;
    else if (a == 1) out << mono;
    else out << abs_str << "*" << mono;
  }
  return out.str();
}

std::optional<Polynomial> divide_exact(const Polynomial& dividend, const Polynomial& divisor) {
  if (divisor.is_zero()) throw std::logic_error("exact division by the zero polynomial");
  require_same_vars(dividend, divisor);
  Polynomial quotient(dividend.vars());
  Polynomial remainder = dividend;
  const auto& lead_div = *divisor.terms().begin();
  while (!remainder.is_zero()) {
    const auto& lead_rem = *remainder.terms().begin();
    std::vector<unsigned> exps(lead_rem.first.size());
    for (size_t i = 0; i < exps.size(); ++i) {
      if (lead_rem.first[i] < lead_div.first[i]) return std::nullopt;
      exps[i] = lead_rem.first[i] - lead_div.first[i];
    }
    Polynomial term(dividend.vars());
    term.add_term(std::move(exps), lead_rem.second / lead_div.second);
    quotient += term;
    remainder -= term * divisor;
  }
  return quotient;
}

Polynomial mul_checked(const Polynomial& lhs, const Polynomial& rhs, std::size_t cap) {
  if (lhs.term_count() != 0 && rhs.term_count() > cap / lhs.term_count())
    fail(Errc::DegreeOverflow, "monomial budget of " + std::to_string(cap) + " exceeded by product of " +
                                   std::to_string(lhs.term_count()) + " x " + std::to_string(rhs.term_count()) +
                                   " terms");
  Polynomial out = lhs * rhs;
  if (out.term_count() > cap)
    fail(Errc::DegreeOverflow, "monomial budget of " + std::to_string(cap) + " exceeded");
  return out;
}

RationalFunction::RationalFunction() : num_(), den_(Polynomial::constant(num_.vars(), Rational(1))) {}

RationalFunction::RationalFunction(Polynomial num)
    : num_(std::move(num)), den_(Polynomial::constant(num_.vars(), Rational(1))) {}

RationalFunction::RationalFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
  require_same_vars(num_, den_);
  normalize();
}

RationalFunction RationalFunction::constant(VarList vars, Rational value) {
  return RationalFunction(Polynomial::constant(std::move(vars), std::move(value)));
}

void RationalFunction::normalize() {
  if (den_.is_zero())
    fail(Errc::DivisionByZeroPolynomial, "rational function with identically zero denominator");
  if (num_.is_zero()) {
    den_ = Polynomial::constant(num_.vars(), Rational(1));
    return;
  }
  if (num_ == den_) {
    num_ = Polynomial::constant(num_.vars(), Rational(1));
    den_ = Polynomial::constant(num_.vars(), Rational(1));
    return;
  }
  if (den_.is_constant()) {
    Rational c = den_.constant_value();
    num_ = num_.scaled(1 / c);
    den_ = Polynomial::constant(num_.vars(), Rational(1));
    return;
  }
  // Monic denominator. State elimination can produce determinant-sized
  // coefficients; the scalar rescale keeps evaluated magnitudes near the
  // function's actual range instead of overflowing a double.
  Rational c = den_.leading_coefficient();
  num_ = num_.scaled(1 / c);
  den_ = den_.scaled(1 / c);
}

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
  if (a.den_ == b.den_) return RationalFunction(a.num_ + b.num_, a.den_);
  return RationalFunction(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
  if (a.den_ == b.den_) return RationalFunction(a.num_ - b.num_, a.den_);
  return RationalFunction(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
  return RationalFunction(a.num_ * b.num_, a.den_ * b.den_);
}

RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
  if (b.num_.is_zero()) fail(Errc::DivisionByZeroPolynomial, "division by the zero rational function");
  return RationalFunction(a.num_ * b.den_, a.den_ * b.num_);
}

bool operator==(const RationalFunction& a, const RationalFunction& b) {
  return a.num_ == b.num_ && a.den_ == b.den_;
}

RationalFunction RationalFunction::derivative(int var) const {
  return RationalFunction(num_.derivative(var) * den_ - num_ * den_.derivative(var), den_ * den_);
}

double RationalFunction::evaluate(std::span<const double> point) const {
  double d = den_.evaluate(point);
  if (std::fabs(d) <= 1e-14)
    fail(Errc::DenominatorNearZero, "denominator evaluates to " + std::to_string(d));
  return num_.evaluate(point) / d;
}

std::string RationalFunction::to_string() const {
  if (den_.is_constant() && den_.constant_value() == 1) return num_.to_string();
  return num_.to_string() + " / " + den_.to_string();
}

}  // namespace advmc
