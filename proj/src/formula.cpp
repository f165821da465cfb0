#include "kbcab/formula.hpp"

#include <cctype>
#include <map>

#include "kbcab/error.hpp"

namespace kbcab {

Formula Formula::atom(std::string name, std::vector<Term> args) {
  Formula f;
  f.kind = Kind::predicate;
  f.name = std::move(name);
  f.args = std::move(args);
  return f;
}

Formula Formula::negation(Formula inner) {
  Formula f;
  f.kind = Kind::negation;
  f.children.push_back(std::move(inner));
  return f;
}

Formula Formula::conjunction(Formula lhs, Formula rhs) {
  Formula f;
  f.kind = Kind::conjunction;
  f.children.push_back(std::move(lhs));
  f.children.push_back(std::move(rhs));
  return f;
}

Formula Formula::implication(Formula lhs, Formula rhs) {
  Formula f = conjunction(std::move(lhs), std::move(rhs));
  f.kind = Kind::implication;
  return f;
}

Formula Formula::exists(std::vector<Term> vars, Formula body) {
  Formula f;
  f.kind = Kind::exists;
  f.vars = std::move(vars);
  f.children.push_back(std::move(body));
  return f;
}

Formula Formula::forall(std::vector<Term> vars, Formula body) {
  Formula f = exists(std::move(vars), std::move(body));
  f.kind = Kind::forall;
  return f;
}

namespace {

std::string render(const Formula& f, bool top) {
  auto wrap = [&](std::string s) { return top ? s : "(" + s + ")"; };
  switch (f.kind) {
    case Formula::Kind::predicate: {
      std::string s = f.name + "(";
      for (std::size_t i = 0; i < f.args.size(); ++i) s += (i ? "," : "") + f.args[i].name;
      return s + ")";
    }
    case Formula::Kind::negation:
      return "~" + render(f.children[0], false);
    case Formula::Kind::conjunction:
      return wrap(render(f.children[0], false) + " & " + render(f.children[1], false));
    case Formula::Kind::implication:
      return wrap(render(f.children[0], false) + " -> " + render(f.children[1], false));
    case Formula::Kind::exists:
    case Formula::Kind::forall: {
      std::string s = f.kind == Formula::Kind::exists ? "exists" : "forall";
      for (const Term& v : f.vars) s += " " + v.name;
      return wrap(s + ". " + render(f.children[0], true));
    }
  }
  return {};
}

enum class Tok { ident, lparen, rparen, comma, dot, amp, tilde, arrow, end };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int column;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_space();
    const int line = line_, col = col_;
    if (pos_ >= src_.size()) return {Tok::end, "", line, col};
    const char c = src_[pos_];
    auto single = [&](Tok k) {
      advance();
      return Token{k, std::string(1, c), line, col};
    };
    switch (c) {
      case '(': return single(Tok::lparen);
      case ')': return single(Tok::rparen);
      case ',': return single(Tok::comma);
      case '.': return single(Tok::dot);
      case '&': return single(Tok::amp);
      case '~': return single(Tok::tilde);
      default: break;
    }
    if (c == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') {
      advance();
      advance();
      return {Tok::arrow, "->", line, col};
    }
    if (c == '_' || (c >= 'a' && c <= 'z')) {
      std::string text;
      while (pos_ < src_.size()) {
        const char d = src_[pos_];
        const bool ident_char = d == '_' || (d >= 'a' && d <= 'z') || (d >= '0' && d <= '9') || d == '-';
        if (!ident_char) break;
        if (d == '-' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '>') break;
        text += d;
        advance();
      }
      return {Tok::ident, std::move(text), line, col};
    }
    throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_space() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) advance();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : lexer_(src) { tok_ = lexer_.next(); }

  Formula parse() {
    Formula f = formula();
    if (tok_.kind != Tok::end) fail("unexpected '" + tok_.text + "' after formula");
    return f;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw SyntaxError(msg, tok_.line, tok_.column);
  }
  [[noreturn]] void fail_at(const std::string& msg, const Token& at) const {
    throw SyntaxError(msg, at.line, at.column);
  }

  void shift() { tok_ = lexer_.next(); }
  void expect(Tok kind, const char* what) {
    if (tok_.kind != kind)
      fail(std::string("expected ") + what + (tok_.kind == Tok::end ? " at end of input" : ", got '" + tok_.text + "'"));
    shift();
  }
  bool is_keyword() const {
    return tok_.kind == Tok::ident && (tok_.text == "exists" || tok_.text == "forall");
  }

  Formula formula() {
    if (is_keyword()) return quant();
    Formula lhs = conj();
    if (tok_.kind == Tok::arrow) {
      shift();
      return Formula::implication(std::move(lhs), formula());
    }
    return lhs;
  }

  Formula quant() {
    const bool universal = tok_.text == "forall";
    shift();
    std::vector<Term> vars;
    const std::size_t scope_mark = scope_.size();
    while (tok_.kind == Tok::ident && !is_keyword()) {
      if (tok_.text[0] == '_') fail("'" + tok_.text + "' is a constant and cannot be bound");
      vars.push_back(Term::variable(tok_.text, next_binder_++));
      scope_.push_back(vars.back());
      shift();
    }
    if (vars.empty()) fail("expected a variable after quantifier");
    expect(Tok::dot, "'.'");
    Formula body = formula();
    scope_.resize(scope_mark);
    return universal ? Formula::forall(std::move(vars), std::move(body))
                     : Formula::exists(std::move(vars), std::move(body));
  }

  Formula conj() {
    Formula f = unary();
    while (tok_.kind == Tok::amp) {
      shift();
      f = Formula::conjunction(std::move(f), unary());
    }
    return f;
  }

  Formula unary() {
    if (tok_.kind == Tok::tilde) {
      shift();
      return Formula::negation(unary());
    }
    if (tok_.kind == Tok::lparen) {
      shift();
      Formula f = formula();
      expect(Tok::rparen, "')'");
      return f;
    }
    if (is_keyword()) fail("quantifier must be parenthesized here");
    return atom();
  }

  Formula atom() {
    if (tok_.kind != Tok::ident) fail(tok_.kind == Tok::end ? "unexpected end of input" : "unexpected '" + tok_.text + "'");
    const Token head = tok_;
    shift();
    expect(Tok::lparen, "'(' after predicate name");
    std::vector<Term> args;
    args.push_back(term());
    while (tok_.kind == Tok::comma) {
      shift();
      args.push_back(term());
    }
    expect(Tok::rparen, "')'");
    if (args.size() > 2) fail_at("predicate '" + head.text + "' has arity " + std::to_string(args.size()) + "; only 1 or 2 are supported", head);
    auto [it, inserted] = arity_.try_emplace(head.text, args.size());
    if (!inserted && it->second != args.size())
      fail_at("arity conflict for '" + head.text + "': " + std::to_string(it->second) + " vs " + std::to_string(args.size()), head);
    return Formula::atom(head.text, std::move(args));
  }

  Term term() {
    if (tok_.kind != Tok::ident || is_keyword()) fail("expected a term");
    const Token t = tok_;
    shift();
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it)
      if (it->name == t.text) return *it;
    if (t.text[0] == '_') return Term::constant(t.text);
    fail_at("unbound variable '" + t.text + "'", t);
  }

  Lexer lexer_;
  Token tok_;
  std::vector<Term> scope_;
  std::map<std::string, std::size_t> arity_;
  int next_binder_ = 0;
};

}  // namespace

std::string Formula::to_string() const { return render(*this, true); }

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

}  // namespace kbcab
