#include "layit/synthesis.hpp"

#include <algorithm>
#include <charconv>

#include "layit/layout.hpp"

namespace layit {

std::string_view name(const AnyConstraint& c) {
  return std::visit([](auto v) { return name(v); }, c);
}

std::optional<AnyConstraint> constraint_from_name(std::string_view s) {
  if (auto u = unary_constraint_from_name(s)) return AnyConstraint(*u);
  if (auto b = binary_constraint_from_name(s)) return AnyConstraint(*b);
  return std::nullopt;
}

std::string TransformRule::id() const { return "p" + std::to_string(production) + "-" + std::string(name(constraint)); }

std::optional<TransformRule> parse_rule_id(std::string_view id) {
  if (id.size() < 3 || id[0] != 'p') return std::nullopt;
  auto dash = id.find('-');
  if (dash == std::string_view::npos) return std::nullopt;
  std::size_t production = 0;
  auto digits = id.substr(1, dash - 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), production);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || digits.empty()) return std::nullopt;
  auto c = constraint_from_name(id.substr(dash + 1));
  if (!c) return std::nullopt;
  return TransformRule{production, *c};
}

bool CandidateSet::all_empty() const {
  return std::all_of(per_rule.begin(), per_rule.end(), [](const auto& kv) { return kv.second.empty(); });
}

std::size_t CandidateSet::size() const {
  std::size_t total = 0;
  for (const auto& [_, rules] : per_rule) total += rules.size();
  return total;
}

bool CandidateSet::contains(const TransformRule& r) const {
  auto it = per_rule.find(r.production);
  return it != per_rule.end() && std::find(it->second.begin(), it->second.end(), r) != it->second.end();
}

std::vector<TransformRule> CandidateSet::ordered() const {
  std::vector<TransformRule> out;
  for (const auto& [_, rules] : per_rule) out.insert(out.end(), rules.begin(), rules.end());
  return out;
}

CandidateSet init_candidates(const Grammar& g) {
  CandidateSet out;
  for (std::size_t i = 0; i < g.productions().size(); ++i) {
    const auto& rhs = g.production(i).rhs;
    if (auto* u = std::get_if<UnaryClause>(&rhs); u && !u->constraint) {
      auto& rules = out.per_rule[i];
      for (auto c : kUnaryConstraints) rules.push_back({i, c});
    } else if (auto* b = std::get_if<BinaryClause>(&rhs); b && !b->constraint) {
      auto& rules = out.per_rule[i];
      for (auto c : kBinaryConstraints) rules.push_back({i, c});
    }
  }
  return out;
}

namespace {

TreePtr redecorate_at(const TreePtr& t, std::span<const PositionedToken> tokens, std::size_t& next) {
  switch (t->kind()) {
    case ParseTree::Kind::Eps:
      return t;
    case ParseTree::Kind::Token: {
      const auto& tk = tokens[next++];
      if (tk.term != t->tok().term) throw Error("feedback token does not match the tree leaf");
      return ParseTree::token(t->root(), tk);
    }
    case ParseTree::Kind::Unary:
      return ParseTree::unary(t->root(), redecorate_at(t->children()[0], tokens, next));
    case ParseTree::Kind::Binary: {
      auto l = redecorate_at(t->children()[0], tokens, next);
      auto r = redecorate_at(t->children()[1], tokens, next);
      return ParseTree::binary(t->root(), std::move(l), std::move(r));
    }
  }
  return t;
}

}  // namespace

TreePtr redecorate(const TreePtr& tree, const Sentence& w) {
  if (tree->word().terminals() != w.terminals())
    throw Error("feedback tokens differ from the ambiguous sentence");
  std::size_t next = 0;
  auto out = redecorate_at(tree, w.tokens(), next);
  if (!(out->word() == w)) throw Error("internal: redecorated tree does not span the feedback sentence");
  return out;
}

std::vector<TreePtr> feedback_trees(const AmbiguityWitness& witness, std::span<const FeedbackItem> feedback) {
  std::vector<TreePtr> out;
  for (const auto& item : feedback) {
    if (item.tree_index >= witness.trees.size())
      throw Error("tree index " + std::to_string(item.tree_index) + " out of range");
    out.push_back(redecorate(witness.trees[item.tree_index], item.sentence));
  }
  return out;
}

namespace {

void visit(const ParseTree& t, const Grammar& g, CandidateSet& cands) {
  auto prune = [&](std::size_t production, auto holds) {
    cands.exercised.insert(production);
    auto it = cands.per_rule.find(production);
    if (it == cands.per_rule.end()) return;
    auto& rules = it->second;
    rules.erase(std::remove_if(rules.begin(), rules.end(), [&](const TransformRule& r) { return !holds(r); }),
                rules.end());
  };

  if (t.kind() == ParseTree::Kind::Unary) {
    const auto& child = *t.children()[0];
    if (auto p = g.find_unary(t.root(), child.root())) {
      prune(*p, [&](const TransformRule& r) {
        return eval_unary(std::get<UnaryConstraint>(r.constraint), child.word());
      });
    }
  } else if (t.kind() == ParseTree::Kind::Binary) {
    const auto& l = *t.children()[0];
    const auto& r = *t.children()[1];
    if (auto p = g.find_binary(t.root(), l.root(), r.root())) {
      prune(*p, [&](const TransformRule& rule) {
        return eval_binary(std::get<BinaryConstraint>(rule.constraint), l.word(), r.word());
      });
    }
  }
  for (const auto& c : t.children()) visit(*c, g, cands);
}

}  // namespace

CandidateSet filter_candidates(CandidateSet cands, const Grammar& g, std::span<const TreePtr> trees) {
  for (const auto& t : trees) visit(*t, g, cands);
  return cands;
}

SynthesisResult synthesize(const Grammar& g, const AmbiguityWitness& witness, std::span<const FeedbackItem> feedback) {
  if (feedback.empty()) throw Error("no feedback given");
  auto trees = feedback_trees(witness, feedback);
  auto cands = filter_candidates(init_candidates(g), g, trees);
  if (cands.all_empty()) return Inconsistent{};
  return cands;
}

Grammar apply_rules(const Grammar& g, std::span<const TransformRule> accepted) {
  if (accepted.empty()) throw Error("accept at least one candidate");
  std::vector<Production> productions(g.productions().begin(), g.productions().end());
  std::set<std::size_t> seen;
  for (const auto& r : accepted) {
    if (r.production >= productions.size()) throw Error("candidate " + r.id() + " targets no production");
    if (!seen.insert(r.production).second)
      throw Error("two candidates selected for " + to_string(productions[r.production], g.symbols()));
    auto& rhs = productions[r.production].rhs;
    if (auto* u = std::get_if<UnaryClause>(&rhs); u && !u->constraint &&
                                                  std::holds_alternative<UnaryConstraint>(r.constraint)) {
      u->constraint = std::get<UnaryConstraint>(r.constraint);
    } else if (auto* b = std::get_if<BinaryClause>(&rhs); b && !b->constraint &&
                                                         std::holds_alternative<BinaryConstraint>(r.constraint)) {
      b->constraint = std::get<BinaryConstraint>(r.constraint);
    } else {
      throw Error("candidate " + r.id() + " does not fit " + to_string(productions[r.production], g.symbols()));
    }
  }
  Grammar out(g.symbols(), std::move(productions));
  if (auto diags = validate(out); !diags.empty()) throw Error("refined grammar is invalid: " + diags.front().message);
  return out;
}

bool is_refinement(const Grammar& g, const Grammar& g2) {
  const auto& s1 = g.symbols();
  const auto& s2 = g2.symbols();
  if (s1.nonterminal_count() != s2.nonterminal_count() || s1.terminal_count() != s2.terminal_count()) return false;
  for (std::size_t i = 0; i < s1.nonterminal_count(); ++i)
    if (s1.name(Nonterminal(i)) != s2.name(Nonterminal(i))) return false;
  for (std::size_t i = 0; i < s1.terminal_count(); ++i)
    if (s1.name(Terminal(i)) != s2.name(Terminal(i))) return false;
  if (s1.start() != s2.start()) return false;

  auto in_g = [&](Nonterminal lhs, const Clause& rhs) {
    for (auto i : g.productions_of(lhs))
      if (g.production(i).rhs == rhs) return true;
    return false;
  };
  for (const auto& p : g2.productions()) {
    if (in_g(p.lhs, p.rhs)) continue;
    if (auto* u = std::get_if<UnaryClause>(&p.rhs); u && u->constraint) {
      if (in_g(p.lhs, UnaryClause{u->child, std::nullopt})) continue;
    } else if (auto* b = std::get_if<BinaryClause>(&p.rhs); b && b->constraint) {
      if (in_g(p.lhs, BinaryClause{b->left, b->right, std::nullopt})) continue;
    }
    return false;
  }
  return true;
}

CandidateDisplay display(const TransformRule& r, const EbnfGrammar& surface, const Grammar& g) {
  const auto& p = g.production(r.production);
  try {
    ConstraintAttachment att{r.production, r.constraint};
    auto lifted = lift_constraints(surface, g, std::span(&att, 1));
    auto rule = static_cast<std::size_t>(p.origin.rule);
    return {lifted.rules[rule].name + ": " + print_expr(lifted.rules[rule].body), true};
  } catch (const Error&) {
    auto refined = p;
    if (auto* u = std::get_if<UnaryClause>(&refined.rhs); u && std::holds_alternative<UnaryConstraint>(r.constraint))
      u->constraint = std::get<UnaryConstraint>(r.constraint);
    if (auto* b = std::get_if<BinaryClause>(&refined.rhs);
        b && std::holds_alternative<BinaryConstraint>(r.constraint))
      b->constraint = std::get<BinaryConstraint>(r.constraint);
    return {to_string(refined, g.symbols()), false};
  }
}

}  // namespace layit
