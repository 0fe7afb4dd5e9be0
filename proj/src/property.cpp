#include "advmc/property.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace advmc {

StateExpr StateExpr::constant(bool value) {
  StateExpr e;
  e.kind = value ? Kind::True : Kind::False;
  return e;
}

StateExpr StateExpr::atom_ref(std::string name) {
  StateExpr e;
  e.kind = Kind::Atom;
  e.atom = std::move(name);
  return e;
}

StateExpr StateExpr::state_eq(int index) {
  StateExpr e;
  e.kind = Kind::StateEq;
  e.state = index;
  return e;
}

StateExpr StateExpr::state_ne(int index) {
  StateExpr e;
  e.kind = Kind::StateNe;
  e.state = index;
  return e;
}

StateExpr StateExpr::negate(StateExpr inner) {
  StateExpr e;
  e.kind = Kind::Not;
  e.kids.push_back(std::move(inner));
  return e;
}

StateExpr StateExpr::conj(StateExpr a, StateExpr b) {
  StateExpr e;
  e.kind = Kind::And;
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

StateExpr StateExpr::disj(StateExpr a, StateExpr b) {
  StateExpr e;
  e.kind = Kind::Or;
  e.kids.push_back(std::move(a));
  e.kids.push_back(std::move(b));
  return e;
}

namespace {

enum class Tok { LBrack, RBrack, LParen, RParen, And, Or, Not, Eq, Ne, Le, Question, Ident, Int, End };

struct Token {
  Tok kind;
  std::string text;
  long value = 0;
  size_t pos = 0;
};

[[noreturn]] void syntax_error(size_t pos, const std::string& expected, const std::string& got) {
  fail(Errc::SyntaxError, "at position " + std::to_string(pos) + ": expected " + expected + ", got " + got);
}

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> out;
  size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
    size_t pos = i;
    switch (c) {
      case '[': out.push_back({Tok::LBrack, "[", 0, pos}); ++i; continue;
      case ']': out.push_back({Tok::RBrack, "]", 0, pos}); ++i; continue;
      case '(': out.push_back({Tok::LParen, "(", 0, pos}); ++i; continue;
      case ')': out.push_back({Tok::RParen, ")", 0, pos}); ++i; continue;
      case '&': out.push_back({Tok::And, "&", 0, pos}); ++i; continue;
      case '|': out.push_back({Tok::Or, "|", 0, pos}); ++i; continue;
      case '=': out.push_back({Tok::Eq, "=", 0, pos}); ++i; continue;
      case '?': out.push_back({Tok::Question, "?", 0, pos}); ++i; continue;
      case '!':
        if (i + 1 < text.size() && text[i + 1] == '=') { out.push_back({Tok::Ne, "!=", 0, pos}); i += 2; }
        else { out.push_back({Tok::Not, "!", 0, pos}); ++i; }
        continue;
      case '<':
        if (i + 1 < text.size() && text[i + 1] == '=') { out.push_back({Tok::Le, "<=", 0, pos}); i += 2; continue; }
        syntax_error(pos, "'<='", std::string(1, c));
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      Token t{Tok::Int, text.substr(i, j - i), 0, pos};
      t.value = std::stol(t.text);
      out.push_back(t);
      i = j;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t j = i;
      while (j < text.size() &&
             (std::isalnum(static_cast<unsigned char>(text[j])) || text[j] == '_')) ++j;
      out.push_back({Tok::Ident, text.substr(i, j - i), 0, pos});
      i = j;
      continue;
    }
    syntax_error(pos, "a property token", std::string(1, c));
  }
  out.push_back({Tok::End, "<end>", 0, text.size()});
  return out;
}

class Parser {
public:
  explicit Parser(const std::string& text) : toks_(tokenize(text)) {}

  PathFormula parse() {
    expect_ident("P");
    expect(Tok::Eq, "'='");
    expect(Tok::Question, "'?'");
    expect(Tok::LBrack, "'['");
    PathFormula phi = parse_path();
    expect(Tok::RBrack, "']'");
    if (peek().kind != Tok::End) syntax_error(peek().pos, "end of property", peek().text);
    return phi;
  }

private:
  const Token& peek() const { return toks_[i_]; }
  const Token& advance() { return toks_[i_++]; }

  void expect(Tok kind, const std::string& what) {
    if (peek().kind != kind) syntax_error(peek().pos, what, peek().text);
    advance();
  }

  void expect_ident(const std::string& word) {
    if (peek().kind != Tok::Ident || peek().text != word)
      syntax_error(peek().pos, "'" + word + "'", peek().text);
    advance();
  }

  bool at_ident(const std::string& word) const {
    return peek().kind == Tok::Ident && peek().text == word;
  }

  std::optional<long> parse_optional_bound() {
    if (peek().kind != Tok::Le) return std::nullopt;
    advance();
    if (peek().kind != Tok::Int) syntax_error(peek().pos, "a step bound", peek().text);
    return advance().value;
  }

  PathFormula parse_path() {
    PathFormula phi;
    if (at_ident("X")) {
      advance();
      phi.kind = PathFormula::Kind::Next;
      phi.rhs = parse_or();
      return phi;
    }
    if (at_ident("F")) {
      advance();
      phi.kind = PathFormula::Kind::Until;
      phi.bound = parse_optional_bound();
      phi.lhs = StateExpr::constant(true);
      phi.rhs = parse_or();
      return phi;
    }
    if (at_ident("G")) {
      advance();
      phi.kind = PathFormula::Kind::Until;
      phi.bound = parse_optional_bound();
      phi.lhs = StateExpr::constant(true);
      phi.rhs = StateExpr::negate(parse_or());
      phi.complement = true;
      return phi;
    }
    phi.kind = PathFormula::Kind::Until;
    phi.lhs = parse_or();
    if (!at_ident("U")) syntax_error(peek().pos, "'U'", peek().text);
    advance();
    phi.bound = parse_optional_bound();
    phi.rhs = parse_or();
    return phi;
  }

  StateExpr parse_or() {
    StateExpr e = parse_and();
    while (peek().kind == Tok::Or) {
      advance();
      e = StateExpr::disj(std::move(e), parse_and());
    }
    return e;
  }

  StateExpr parse_and() {
    StateExpr e = parse_unary();
    while (peek().kind == Tok::And) {
      advance();
      e = StateExpr::conj(std::move(e), parse_unary());
    }
    return e;
  }

  StateExpr parse_unary() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Not:
        advance();
        return StateExpr::negate(parse_unary());
      case Tok::LParen: {
        advance();
        StateExpr e = parse_or();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        if (t.text == "true") { advance(); return StateExpr::constant(true); }
        if (t.text == "false") { advance(); return StateExpr::constant(false); }
        if (t.text == "s") {
          advance();
          if (peek().kind == Tok::Eq) {
            advance();
            if (peek().kind != Tok::Int) syntax_error(peek().pos, "a state index", peek().text);
            return StateExpr::state_eq(static_cast<int>(advance().value));
          }
          if (peek().kind == Tok::Ne) {
            advance();
            if (peek().kind != Tok::Int) syntax_error(peek().pos, "a state index", peek().text);
            return StateExpr::state_ne(static_cast<int>(advance().value));
          }
          syntax_error(peek().pos, "'=' or '!=' after 's'", peek().text);
        }
        if (t.text == "X" || t.text == "F" || t.text == "G" || t.text == "U" || t.text == "P")
          syntax_error(t.pos,
                       "a state expression (nested temporal operators and boolean combinations of "
                       "path formulae are not supported)",
                       t.text);
        advance();
        return StateExpr::atom_ref(t.text);
      }
      default:
        syntax_error(t.pos, "a state expression", t.text);
    }
  }

  std::vector<Token> toks_;
  size_t i_ = 0;
};

struct LabelView {
  int n;
  const std::vector<std::string>& atoms;
  const std::vector<std::vector<int>>& labels;

  int atom_index(const std::string& name) const {
    for (int i = 0; i < static_cast<int>(atoms.size()); ++i)
      if (atoms[i] == name) return i;
    return -1;
  }

  bool has_atom(int state, int atom) const {
    const auto& l = labels[state];
    return std::binary_search(l.begin(), l.end(), atom);
  }
};

void check_resolvable(const LabelView& view, const StateExpr& e) {
  switch (e.kind) {
    case StateExpr::Kind::Atom:
      if (view.atom_index(e.atom) < 0)
        fail(Errc::UnknownAtom, "atom '" + e.atom + "' is not declared by the model");
      break;
    case StateExpr::Kind::StateEq:
    case StateExpr::Kind::StateNe:
      if (e.state < 0 || e.state >= view.n)
        fail(Errc::StateIndexOutOfRange,
             "state index " + std::to_string(e.state) + " outside 0.." + std::to_string(view.n - 1));
      break;
    default:
      break;
  }
  for (const StateExpr& k : e.kids) check_resolvable(view, k);
}

bool eval_at(const LabelView& view, const StateExpr& e, int s) {
  switch (e.kind) {
    case StateExpr::Kind::True: return true;
    case StateExpr::Kind::False: return false;
    case StateExpr::Kind::Atom: return view.has_atom(s, view.atom_index(e.atom));
    case StateExpr::Kind::StateEq: return s == e.state;
    case StateExpr::Kind::StateNe: return s != e.state;
    case StateExpr::Kind::Not: return !eval_at(view, e.kids[0], s);
    case StateExpr::Kind::And: return eval_at(view, e.kids[0], s) && eval_at(view, e.kids[1], s);
    case StateExpr::Kind::Or: return eval_at(view, e.kids[0], s) || eval_at(view, e.kids[1], s);
  }
  return false;
}

std::vector<double> next_kernel(const Dtmc& model, const std::vector<char>& rhs) {
  std::vector<double> x(model.n, 0.0);
  for (int s = 0; s < model.n; ++s) {
    double acc = 0.0;
    for (const Transition& t : model.rows[s])
      if (rhs[t.to]) acc += t.p;
    x[s] = acc;
  }
  return x;
}

std::vector<double> bounded_until_kernel(const Dtmc& model, const std::vector<char>& lhs,
                                         const std::vector<char>& rhs, long k) {
  std::vector<double> x(model.n), next(model.n);
  for (int s = 0; s < model.n; ++s) x[s] = rhs[s] ? 1.0 : 0.0;
  for (long round = 0; round < k; ++round) {
    for (int s = 0; s < model.n; ++s) {
      if (rhs[s]) { next[s] = 1.0; continue; }
      if (!lhs[s]) { next[s] = 0.0; continue; }
      double acc = 0.0;
      for (const Transition& t : model.rows[s]) acc += t.p * x[t.to];
      next[s] = acc;
    }
    std::swap(x, next);
  }
  return x;
}

std::vector<double> unbounded_until_kernel(const Dtmc& model, const std::vector<char>& lhs,
                                           const std::vector<char>& rhs) {
  const int n = model.n;
  std::vector<std::vector<int>> pred(n);
  std::vector<char> deficit(n, 0);
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (const Transition& t : model.rows[s]) {
      if (t.p > 0.0) pred[t.to].push_back(s);
      sum += t.p;
    }
    if (sum < 1.0 - 1e-12) deficit[s] = 1;
  }

  // Prob-0: states that cannot reach rhs through lhs-states.
  std::vector<char> reach(n, 0);
  std::vector<int> queue;
  for (int s = 0; s < n; ++s)
    if (rhs[s]) { reach[s] = 1; queue.push_back(s); }
  while (!queue.empty()) {
    int t = queue.back();
    queue.pop_back();
    for (int p : pred[t]) {
      if (!reach[p] && lhs[p] && !rhs[p]) { reach[p] = 1; queue.push_back(p); }
    }
  }

  // Prob-1: complement of the set that can reach a prob-0 state (or lose
  // mass to the implicit sink) while staying inside lhs-and-not-rhs.
  std::vector<char> bad(n, 0);
  queue.clear();
  for (int s = 0; s < n; ++s) {
    if (!reach[s]) { bad[s] = 1; queue.push_back(s); }
    else if (deficit[s] && lhs[s] && !rhs[s]) { bad[s] = 1; queue.push_back(s); }
  }
  while (!queue.empty()) {
    int t = queue.back();
    queue.pop_back();
    for (int p : pred[t]) {
      if (!bad[p] && lhs[p] && !rhs[p]) { bad[p] = 1; queue.push_back(p); }
    }
  }

  std::vector<double> x(n, 0.0);
  std::vector<int> interior;
  std::vector<int> slot(n, -1);
  for (int s = 0; s < n; ++s) {
    if (!reach[s]) { x[s] = 0.0; continue; }
    if (!bad[s]) { x[s] = 1.0; continue; }
    slot[s] = static_cast<int>(interior.size());
    interior.push_back(s);
  }
  const int m = static_cast<int>(interior.size());
  if (m == 0) return x;

  // Dense solve of (I - A) y = b on the remaining block, partial pivoting.
  std::vector<double> mat(static_cast<size_t>(m) * (m + 1), 0.0);
  auto at = [&](int r, int c) -> double& { return mat[static_cast<size_t>(r) * (m + 1) + c]; };
  for (int r = 0; r < m; ++r) {
    at(r, r) = 1.0;
    for (const Transition& t : model.rows[interior[r]]) {
      if (slot[t.to] >= 0) at(r, slot[t.to]) -= t.p;
      else if (x[t.to] == 1.0) at(r, m) += t.p;
    }
  }
  for (int col = 0; col < m; ++col) {
    int pivot = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(at(r, col)) > std::fabs(at(pivot, col))) pivot = r;
    if (std::fabs(at(pivot, col)) < 1e-12)
      fail(Errc::SingularSystem, "pivot " + std::to_string(col) + " below tolerance in until solve");
    if (pivot != col)
      for (int c = col; c <= m; ++c) std::swap(at(pivot, c), at(col, c));
    for (int r = col + 1; r < m; ++r) {
      double f = at(r, col) / at(col, col);
      if (f == 0.0) continue;
      for (int c = col; c <= m; ++c) at(r, c) -= f * at(col, c);
    }
  }
  for (int r = m - 1; r >= 0; --r) {
    double acc = at(r, m);
    for (int c = r + 1; c < m; ++c) acc -= at(r, c) * x[interior[c]];
    x[interior[r]] = acc / at(r, r);
  }
  return x;
}

}  // namespace

PathFormula parse_property(const std::string& text) { return Parser(text).parse(); }

std::vector<char> eval_state_expr(int n, const std::vector<std::string>& atoms,
                                  const std::vector<std::vector<int>>& labels,
                                  const StateExpr& expr) {
  LabelView view{n, atoms, labels};
  check_resolvable(view, expr);
  std::vector<char> out(n, 0);
  for (int s = 0; s < n; ++s) out[s] = eval_at(view, expr, s) ? 1 : 0;
  return out;
}

std::vector<char> eval_state_expr(const Dtmc& model, const StateExpr& expr) {
  return eval_state_expr(model.n, model.atoms, model.labels, expr);
}

std::vector<double> sat_prob_all_states(const Dtmc& model, const PathFormula& phi) {
  std::vector<double> x;
  if (phi.kind == PathFormula::Kind::Next) {
    x = next_kernel(model, eval_state_expr(model, phi.rhs));
  } else {
    std::vector<char> lhs = eval_state_expr(model, phi.lhs);
    std::vector<char> rhs = eval_state_expr(model, phi.rhs);
    x = phi.bound ? bounded_until_kernel(model, lhs, rhs, *phi.bound)
                  : unbounded_until_kernel(model, lhs, rhs);
  }
  if (phi.complement)
    for (double& v : x) v = 1.0 - v;
  return x;
}

double sat_prob(const Dtmc& model, const PathFormula& phi) {
  return sat_prob_all_states(model, phi)[model.init];
}

}  // namespace advmc
