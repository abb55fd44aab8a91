#include <algorithm>
#include <functional>
#include <map>

#include "layit/ebnf.hpp"

namespace layit {

namespace {

class Desugarer {
public:
  explicit Desugarer(const EbnfGrammar& g) : g_(g) {}

  Grammar run() {
    expand();
    return Grammar(std::move(symbols_), std::move(productions_));
  }

  // Every emitted production, before duplicates collapse.
  std::vector<Production> sites() {
    expand();
    return std::move(productions_);
  }

private:
  void expand() {
    for (const auto& r : g_.rules) symbols_.add_nonterminal(r.name);
    for (std::size_t r = 0; r < g_.rules.size(); ++r) {
      rule_ = static_cast<int>(r);
      counter_ = 0;
      const auto& rule = g_.rules[r];
      define(*symbols_.find_nonterminal(rule.name), rule.body);
    }
    symbols_.set_start(*symbols_.find_nonterminal(g_.start));
  }

  // Productions for `lhs` from every alternative of `e`.
  void define(Nonterminal lhs, const Expr& e) {
    std::vector<const Expr*> alts;
    collect_alternatives(e, alts);
    for (const auto* alt : alts) {
      if (alt->kind == Expr::Kind::Seq && !alt->children.empty()) {
        sequence(lhs, *alt, 0);
        continue;
      }
      auto clause = clause_of(*alt);
      emit(lhs, clause, {Origin::Role::Alternative, rule_, alt->id, 0});
    }
  }

  // Alt nodes flatten; an Optional alternative contributes ε and its inner
  // alternatives.
  static void collect_alternatives(const Expr& e, std::vector<const Expr*>& out) {
    static const Expr kEmpty{};
    if (e.kind == Expr::Kind::Alt) {
      for (const auto& c : e.children) collect_alternatives(c, out);
    } else if (e.kind == Expr::Kind::Optional) {
      out.push_back(&kEmpty);
      collect_alternatives(e.children[0], out);
    } else {
      out.push_back(&e);
    }
  }

  Clause clause_of(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Seq:
        return EmptyClause{};
      case Expr::Kind::Terminal:
        return AtomClause{symbols_.add_terminal(e.text)};
      case Expr::Kind::Ref:
        return UnaryClause{*symbols_.find_nonterminal(e.text), std::nullopt};
      case Expr::Kind::Unary:
        return UnaryClause{sym(e.children[0]), e.unary};
      case Expr::Kind::Binary: {
        auto l = sym(e.children[0]);
        auto r = sym(e.children[1]);
        return BinaryClause{l, r, e.binary};
      }
      case Expr::Kind::List:
        return UnaryClause{sym(e), std::nullopt};
      case Expr::Kind::Alt:
      case Expr::Kind::Optional:
        break;
    }
    throw Error("internal: unexpected alternative shape");
  }

  // lhs -> item[j] rest, where rest covers items j+1.. of the sequence.
  void sequence(Nonterminal lhs, const Expr& seq, std::size_t j) {
    const auto& items = seq.children;
    auto first = sym(items[j]);
    Nonterminal rest;
    if (j + 2 == items.size()) {
      rest = sym(items[j + 1]);
    } else {
      rest = fresh();
      sequence(rest, seq, j + 1);
    }
    emit(lhs, BinaryClause{first, rest, std::nullopt},
         {Origin::Role::SequenceSuffix, rule_, seq.id, static_cast<int>(j)});
  }

  Nonterminal sym(const Expr& e) {
    if (e.kind == Expr::Kind::Ref) return *symbols_.find_nonterminal(e.text);
    auto n = fresh();
    if (e.kind == Expr::Kind::List) {
      list(n, e);
    } else {
      define(n, e);
    }
    return n;
  }

  // L -> E | E sep L   (plus)      L -> ε | E sep L   (star)
  void list(Nonterminal l, const Expr& e) {
    auto elem = fresh();
    define(elem, e.children[0]);
    if (e.at_least_one)
      emit(l, UnaryClause{elem, std::nullopt}, {Origin::Role::ListBase, rule_, e.id, 0});
    else
      emit(l, EmptyClause{}, {Origin::Role::ListBase, rule_, e.id, 0});
    emit(l, BinaryClause{elem, l, e.separator}, {Origin::Role::ListCons, rule_, e.id, 0});
  }

  Nonterminal fresh() {
    const auto& base = g_.rules[static_cast<std::size_t>(rule_)].name;
    while (true) {
      auto name = base + "~" + std::to_string(++counter_);
      if (!symbols_.find_nonterminal(name)) return symbols_.add_nonterminal(name);
    }
  }

  void emit(Nonterminal lhs, Clause rhs, Origin origin) { productions_.push_back({lhs, std::move(rhs), origin}); }

  const EbnfGrammar& g_;
  SymbolTable symbols_;
  std::vector<Production> productions_;
  int rule_ = 0;
  int counter_ = 0;
};

const Expr* find_node(const Expr& e, int id) {
  if (e.id == id) return &e;
  for (const auto& c : e.children)
    if (auto* f = find_node(c, id)) return f;
  return nullptr;
}

Expr* find_node(Expr& e, int id) {
  if (e.id == id) return &e;
  for (auto& c : e.children)
    if (auto* f = find_node(c, id)) return f;
  return nullptr;
}

bool same_rhs(const Clause& a, const Clause& b) {
  if (a.index() != b.index()) return false;
  if (auto* x = std::get_if<AtomClause>(&a)) return x->term == std::get<AtomClause>(b).term;
  if (auto* x = std::get_if<UnaryClause>(&a)) {
    const auto& y = std::get<UnaryClause>(b);
    return x->child == y.child && x->constraint == y.constraint;
  }
  if (auto* x = std::get_if<BinaryClause>(&a)) {
    const auto& y = std::get<BinaryClause>(b);
    return x->left == y.left && x->right == y.right && x->constraint == y.constraint;
  }
  return true;
}

}  // namespace

Grammar desugar(const EbnfGrammar& g) { return Desugarer(g).run(); }

std::string origin_text(const EbnfGrammar& g, const Production& p) {
  const auto& o = p.origin;
  if (o.role == Origin::Role::Synthetic || o.rule < 0 || o.rule >= static_cast<int>(g.rules.size())) return {};
  const auto& rule = g.rules[static_cast<std::size_t>(o.rule)];
  const auto* node = find_node(rule.body, o.node);
  if (!node) return o.role == Origin::Role::Alternative ? "()" : "";
  if (o.role == Origin::Role::SequenceSuffix) {
    std::string out;
    for (std::size_t i = static_cast<std::size_t>(o.suffix); i < node->children.size(); ++i) {
      if (!out.empty()) out += ' ';
      const auto& item = node->children[i];
      bool group = item.kind == Expr::Kind::Alt || (item.kind == Expr::Kind::Seq && !item.children.empty());
      out += group ? "(" + print_expr(item) + ")" : print_expr(item);
    }
    return out;
  }
  return print_expr(*node);
}

EbnfGrammar lift_constraints(const EbnfGrammar& g, const Grammar& ls2nf,
                             std::span<const ConstraintAttachment> attachments) {
  EbnfGrammar out = g;
  // A production can come from several identical surface sites; each of
  // them gets the constraint.
  auto sites = Desugarer(g).sites();
  struct Site {
    Production p;
    std::variant<UnaryConstraint, BinaryConstraint> constraint;
  };
  std::vector<Site> ordered;
  for (const auto& att : attachments) {
    const auto& p = ls2nf.production(att.production);
    bool found = false;
    for (const auto& s : sites) {
      if (s.lhs != p.lhs || !same_rhs(s.rhs, p.rhs)) continue;
      ordered.push_back({s, att.constraint});
      found = true;
    }
    if (!found) ordered.push_back({p, att.constraint});
  }
  // Sequence rewrites go from the last suffix backwards so that earlier
  // suffixes see the already-nested tail as a single item.
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Site& a, const Site& b) { return a.p.origin.suffix > b.p.origin.suffix; });

  for (const auto& att : ordered) {
    const auto& p = att.p;
    const auto& o = p.origin;
    if (o.rule < 0 || o.rule >= static_cast<int>(out.rules.size()))
      throw Error("production has no surface origin: " + to_string(p, ls2nf.symbols()));
    auto* node = find_node(out.rules[static_cast<std::size_t>(o.rule)].body, o.node);
    if (!node) throw Error("surface node not found for " + to_string(p, ls2nf.symbols()));

    if (auto* u = std::get_if<UnaryConstraint>(&att.constraint)) {
      if (o.role != Origin::Role::Alternative || !std::holds_alternative<UnaryClause>(p.rhs))
        throw Error("constraint on " + to_string(p, ls2nf.symbols()) + " cannot be expressed in the grammar syntax");
      Expr wrapped;
      wrapped.kind = Expr::Kind::Unary;
      wrapped.unary = *u;
      wrapped.span = node->span;
      wrapped.children.push_back(std::move(*node));
      *node = std::move(wrapped);
      continue;
    }

    auto c = std::get<BinaryConstraint>(att.constraint);
    if (o.role == Origin::Role::ListCons) {
      node->separator = c;
    } else if (o.role == Origin::Role::SequenceSuffix) {
      auto j = static_cast<std::size_t>(o.suffix);
      auto& items = node->children;
      if (j + 2 > items.size()) throw Error("internal: sequence suffix out of range");
      Expr rest;
      if (j + 2 == items.size()) {
        rest = std::move(items[j + 1]);
      } else {
        rest.kind = Expr::Kind::Seq;
        rest.span = items[j + 1].span;
        rest.children.assign(std::make_move_iterator(items.begin() + static_cast<std::ptrdiff_t>(j) + 1),
                             std::make_move_iterator(items.end()));
      }
      Expr pair;
      pair.kind = Expr::Kind::Binary;
      pair.binary = c;
      pair.span = items[j].span;
      pair.children.push_back(std::move(items[j]));
      pair.children.push_back(std::move(rest));
      items.resize(j);
      items.push_back(std::move(pair));
      if (items.size() == 1) {
        auto single = std::move(items.front());
        single.id = node->id;
        *node = std::move(single);
      }
    } else {
      throw Error("constraint on " + to_string(p, ls2nf.symbols()) + " cannot be expressed in the grammar syntax");
    }
  }
  number_nodes(out);
  return out;
}

bool same_productions(const Grammar& a, const Grammar& b) {
  const auto& sa = a.symbols();
  const auto& sb = b.symbols();
  if (sa.nonterminal_count() != sb.nonterminal_count() || sa.terminal_count() != sb.terminal_count()) return false;
  if (sa.name(sa.start()) != sb.name(sb.start())) return false;
  auto render_all = [](const Grammar& g) {
    std::vector<std::string> out;
    for (const auto& p : g.productions()) out.push_back(to_string(p, g.symbols()));
    std::sort(out.begin(), out.end());
    return out;
  };
  return render_all(a) == render_all(b);
}

}  // namespace layit
