#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace kbcab {

struct Term {
  enum class Kind { variable, constant };
  Kind kind = Kind::constant;
  std::string name;
  // Variables: id of the binding quantifier occurrence, unique within a parse
  // (bound variables are renamed apart). -1 for constants.
  int binder = -1;

  static Term constant(std::string name) { return {Kind::constant, std::move(name), -1}; }
  static Term variable(std::string name, int binder) {
    return {Kind::variable, std::move(name), binder};
  }
  bool is_variable() const { return kind == Kind::variable; }
  bool operator==(const Term&) const = default;
  auto operator<=>(const Term&) const = default;
};

struct Formula {
  enum class Kind { predicate, negation, conjunction, implication, exists, forall };

  Kind kind = Kind::predicate;
  std::string name;               // predicate
  std::vector<Term> args;         // predicate, 1 or 2 terms
  std::vector<Term> vars;         // quantifiers
  std::vector<Formula> children;  // negation: 1, conjunction/implication: 2, quantifiers: 1

  static Formula atom(std::string name, std::vector<Term> args);
  static Formula negation(Formula f);
  static Formula conjunction(Formula lhs, Formula rhs);
  static Formula implication(Formula lhs, Formula rhs);
  static Formula exists(std::vector<Term> vars, Formula body);
  static Formula forall(std::vector<Term> vars, Formula body);

  bool operator==(const Formula&) const = default;

  // Re-parsable text, fully parenthesized below the top level.
  std::string to_string() const;
};

// Grammar:
//   formula := quant | impl
//   quant   := ("exists" | "forall") var+ "." formula
//   impl    := conj ["->" formula]
//   conj    := unary {"&" unary}
//   unary   := "~" unary | atom | "(" formula ")"
//   atom    := ident "(" term {"," term} ")"
// Identifiers match [a-z_][a-z0-9_-]*. A term is a variable when a quantifier
// binds it; an unbound identifier is a constant only if it starts with '_'.
// Throws SyntaxError (with line/column) on syntax errors, unbound variables,
// predicate arity conflicts and arities other than 1 or 2.
Formula parse_formula(std::string_view text);

}  // namespace kbcab
