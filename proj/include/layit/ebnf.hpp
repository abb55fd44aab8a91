#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "layit/core.hpp"
#include "layit/grammar.hpp"

namespace layit {

struct SourceSpan {
  int line = 0;
  int col = 0;
};

// Surface expression. Parenthesised groups do not get their own node.
struct Expr {
  enum class Kind {
    Alt,       // children: alternatives (>= 2)
    Seq,       // children: items (0 = ε, otherwise >= 2)
    Terminal,  // text
    Ref,       // text
    Optional,  // children[0]
    List,      // children[0]; at_least_one, separator
    Unary,     // unary layout annotation on children[0]
    Binary,    // binary layout annotation on children[0], children[1]
  };

  Kind kind = Kind::Seq;
  std::string text;
  bool at_least_one = false;
  std::optional<BinaryConstraint> separator;
  UnaryConstraint unary = UnaryConstraint::Offside;
  BinaryConstraint binary = BinaryConstraint::Align;
  std::vector<Expr> children;
  SourceSpan span;
  int id = -1;

  // Structural equality: ignores spans and node ids.
  bool same_shape(const Expr& other) const;
};

struct EbnfRule {
  std::string name;
  Expr body;
  SourceSpan span;
};

struct EbnfGrammar {
  std::vector<EbnfRule> rules;
  std::string start;

  const EbnfRule* find(std::string_view name) const;
  bool same_shape(const EbnfGrammar& other) const;
};

class ParseError : public Error {
public:
  ParseError(const std::string& message, SourceSpan at);
  const std::string& message() const { return message_; }
  SourceSpan at() const { return at_; }

private:
  std::string message_;
  SourceSpan at_;
};

// Grammar file syntax:
//   start <nt>;
//   nt : expr ;
// with `|`, juxtaposition, postfix `? + *`, parentheses, "terminals",
// annotations offside( e ), offside_align( e ), single( e ), aligned( e , e ),
// indented( e , e ), aligned+( e ), aligned*( e ), indented+( e ),
// indented*( e ), and `#` line comments. An annotation name must be followed
// directly by its opening parenthesis.
EbnfGrammar parse_ebnf(std::string_view text);

std::string print_ebnf(const EbnfGrammar& g);
std::string print_expr(const Expr& e);

// Renumbers node ids in pre-order across all rules. parse_ebnf already does this.
void number_nodes(EbnfGrammar& g);

// Translation to binary normal form. Helper nonterminals are named
// `<rule>~<n>`, numbered per surface rule in creation order, so output is a
// deterministic function of the input. List operators expand right-recursively
// through an element helper: L -> E | E sep L (or L -> ε | E sep L), E -> elem.
Grammar desugar(const EbnfGrammar& g);

// Surface text of the construct a production was generated from.
std::string origin_text(const EbnfGrammar& g, const Production& p);

struct ConstraintAttachment {
  std::size_t production;
  std::variant<UnaryConstraint, BinaryConstraint> constraint;
};

// Rewrites the surface grammar so that desugaring it attaches the given
// constraints to the given productions of `desugar(g)`.
EbnfGrammar lift_constraints(const EbnfGrammar& g, const Grammar& ls2nf,
                             std::span<const ConstraintAttachment> attachments);

// Same grammar up to production order and origins.
bool same_productions(const Grammar& a, const Grammar& b);

}  // namespace layit
