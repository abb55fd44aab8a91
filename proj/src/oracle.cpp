#include "layit/oracle.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

#include "layit/layout.hpp"

namespace layit {

TreePtr ParseTree::eps(Nonterminal root) {
  return TreePtr(new ParseTree(Kind::Eps, root));
}

TreePtr ParseTree::token(Nonterminal root, PositionedToken tk) {
  auto t = new ParseTree(Kind::Token, root);
  t->token_ = tk;
  t->word_ = Sentence({tk});
  return TreePtr(t);
}

TreePtr ParseTree::unary(Nonterminal root, TreePtr child) {
  auto t = new ParseTree(Kind::Unary, root);
  t->word_ = child->word();
  t->children_.push_back(std::move(child));
  return TreePtr(t);
}

TreePtr ParseTree::binary(Nonterminal root, TreePtr left, TreePtr right) {
  auto t = new ParseTree(Kind::Binary, root);
  t->word_ = left->word().concat(right->word());
  t->children_.push_back(std::move(left));
  t->children_.push_back(std::move(right));
  return TreePtr(t);
}

std::size_t ParseTree::size() const {
  std::size_t total = 1;
  for (const auto& c : children_) total += c->size();
  return total;
}

std::vector<PositionedToken> ParseTree::leaves() const { return {word_.begin(), word_.end()}; }

bool equal(const ParseTree& a, const ParseTree& b) {
  if (a.kind() != b.kind() || a.root() != b.root()) return false;
  if (a.kind() == ParseTree::Kind::Token) return a.tok() == b.tok();
  if (a.children().size() != b.children().size()) return false;
  for (std::size_t i = 0; i < a.children().size(); ++i)
    if (!equal(*a.children()[i], *b.children()[i])) return false;
  return true;
}

bool valid(const ParseTree& t, const Grammar& g) {
  const auto a = t.root();
  if (index(a) >= g.symbols().nonterminal_count()) return false;
  switch (t.kind()) {
    case ParseTree::Kind::Eps:
      return g.has_empty(a);
    case ParseTree::Kind::Token:
      return g.has_atom(a, t.tok().term);
    case ParseTree::Kind::Unary: {
      const auto& child = *t.children()[0];
      bool rule = false;
      for (auto i : g.productions_of(a)) {
        auto* u = std::get_if<UnaryClause>(&g.production(i).rhs);
        if (!u || u->child != child.root()) continue;
        if (!u->constraint || eval_unary(*u->constraint, child.word())) rule = true;
      }
      return rule && valid(child, g);
    }
    case ParseTree::Kind::Binary: {
      const auto& l = *t.children()[0];
      const auto& r = *t.children()[1];
      bool rule = false;
      for (auto i : g.productions_of(a)) {
        auto* b = std::get_if<BinaryClause>(&g.production(i).rhs);
        if (!b || b->left != l.root() || b->right != r.root()) continue;
        if (!b->constraint || eval_binary(*b->constraint, l.word(), r.word())) rule = true;
      }
      return rule && valid(l, g) && valid(r, g);
    }
  }
  return false;
}

bool similar(const ParseTree& a, const ParseTree& b) {
  if (a.kind() != b.kind() || a.root() != b.root()) return false;
  if (a.kind() == ParseTree::Kind::Token) return a.tok() == b.tok();
  for (std::size_t i = 0; i < a.children().size(); ++i) {
    const auto& x = *a.children()[i];
    const auto& y = *b.children()[i];
    if (x.root() != y.root() || !(x.word() == y.word())) return false;
  }
  return true;
}

// --- chart ------------------------------------------------------------------

namespace {

const std::vector<Nonterminal>& require_order(const Grammar& g) {
  if (!g.acyclic()) throw Error("grammar is cyclic");
  return *g.topo_order();
}

}  // namespace

ParseChart::ParseChart(const Grammar& g, const Sentence& w, std::size_t cap)
    : g_(g), w_(w), k_(w.size()), cap_(std::max<std::size_t>(cap, 1)) {
  const auto& order = require_order(g);
  const auto n = g.symbols().nonterminal_count();
  counts_.assign(n * (k_ + 1) * (k_ + 1), 0);
  auto tokens = w.tokens();

  for (std::size_t delta = 0; delta <= k_; ++delta) {
    for (std::size_t x = 0; x + delta <= k_; ++x) {
      if (delta == 0 && x > 0) break;
      // Successors in the grammar graph first.
      for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const auto a = *it;
        std::size_t total = 0;
        for (auto pi : g.productions_of(a)) {
          const auto& rhs = g.production(pi).rhs;
          if (std::holds_alternative<EmptyClause>(rhs)) {
            if (delta == 0) ++total;
          } else if (auto* at = std::get_if<AtomClause>(&rhs)) {
            if (delta == 1 && tokens[x].term == at->term) ++total;
          } else if (auto* u = std::get_if<UnaryClause>(&rhs)) {
            if (u->constraint && !eval_unary(*u->constraint, tokens.subspan(x, delta))) continue;
            total += count(u->child, x, delta);
          } else if (auto* b = std::get_if<BinaryClause>(&rhs)) {
            for (std::size_t s = 0; s <= delta; ++s) {
              if (b->constraint &&
                  !eval_binary(*b->constraint, tokens.subspan(x, s), tokens.subspan(x + s, delta - s)))
                continue;
              auto c1 = count(b->left, x, s);
              if (c1 == 0) continue;
              auto c2 = count(b->right, x + s, delta - s);
              total += std::min(cap_, c1 * c2);
              if (total >= cap_) break;
            }
          }
          if (total >= cap_) break;
        }
        counts_[slot(a, x, delta)] = std::min(total, cap_);
      }
    }
  }
}

std::size_t ParseChart::slot(Nonterminal a, std::size_t x, std::size_t delta) const {
  if (delta == 0) x = 0;
  return (index(a) * (k_ + 1) + x) * (k_ + 1) + delta;
}

std::size_t ParseChart::count(Nonterminal a, std::size_t x, std::size_t delta) const {
  if (x + delta > k_) throw Error("chart index out of range");
  return counts_[slot(a, x, delta)];
}

// --- tree enumeration -------------------------------------------------------

namespace {

class TreeBuilder {
public:
  TreeBuilder(const Grammar& g, const Sentence& w, std::size_t cap) : g_(g), w_(w), cap_(cap) {
    require_order(g);
  }

  const std::vector<TreePtr>& parses(Nonterminal a, std::size_t x, std::size_t delta) {
    if (delta == 0) x = 0;
    auto key = std::make_tuple(index(a), x, delta);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;

    std::vector<TreePtr> out;
    auto tokens = w_.tokens();
    for (auto pi : g_.productions_of(a)) {
      if (out.size() >= cap_) break;
      const auto& rhs = g_.production(pi).rhs;
      if (std::holds_alternative<EmptyClause>(rhs)) {
        if (delta == 0) out.push_back(ParseTree::eps(a));
      } else if (auto* at = std::get_if<AtomClause>(&rhs)) {
        if (delta == 1 && tokens[x].term == at->term) out.push_back(ParseTree::token(a, tokens[x]));
      } else if (auto* u = std::get_if<UnaryClause>(&rhs)) {
        if (u->constraint && !eval_unary(*u->constraint, tokens.subspan(x, delta))) continue;
        for (const auto& t : parses(u->child, x, delta)) {
          if (out.size() >= cap_) break;
          out.push_back(ParseTree::unary(a, t));
        }
      } else if (auto* b = std::get_if<BinaryClause>(&rhs)) {
        for (std::size_t s = 0; s <= delta && out.size() < cap_; ++s) {
          if ((s == 0 && !g_.nullable(b->left)) || (s == delta && !g_.nullable(b->right))) continue;
          if (b->constraint &&
              !eval_binary(*b->constraint, tokens.subspan(x, s), tokens.subspan(x + s, delta - s)))
            continue;
          const auto& lefts = parses(b->left, x, s);
          if (lefts.empty()) continue;
          const auto& rights = parses(b->right, x + s, delta - s);
          for (const auto& l : lefts) {
            for (const auto& r : rights) {
              if (out.size() >= cap_) break;
              out.push_back(ParseTree::binary(a, l, r));
            }
          }
        }
      }
    }
    return memo_.emplace(key, std::move(out)).first->second;
  }

private:
  const Grammar& g_;
  const Sentence& w_;
  std::size_t cap_;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<TreePtr>> memo_;
};

}  // namespace

std::vector<TreePtr> all_parses(const Grammar& g, Nonterminal a, const Sentence& w, std::size_t cap) {
  if (cap == 0) return {};
  TreeBuilder builder(g, w, cap);
  return builder.parses(a, 0, w.size());
}

bool derives(const Grammar& g, Nonterminal a, const Sentence& w) {
  return ParseChart(g, w, 1).derives(a, 0, w.size());
}

std::size_t count_parses(const Grammar& g, Nonterminal a, const Sentence& w, std::size_t cap) {
  return ParseChart(g, w, cap).count(a, 0, w.size());
}

std::optional<TreePair> tree_diff(const TreePtr& t1, const TreePtr& t2) {
  if (!similar(*t1, *t2)) return TreePair{t1, t2};
  for (std::size_t i = 0; i < t1->children().size(); ++i)
    if (auto d = tree_diff(t1->children()[i], t2->children()[i])) return d;
  return std::nullopt;
}

std::optional<TreePair> ambiguous(const Grammar& g, Nonterminal a, const Sentence& w) {
  if (count_parses(g, a, w, 2) < 2) return std::nullopt;
  auto trees = all_parses(g, a, w, 2);
  if (trees.size() < 2) return std::nullopt;
  return tree_diff(trees[0], trees[1]);
}

// --- reachability -----------------------------------------------------------

bool reachable_bf(const Grammar& g, const Signature& from, const Signature& to) {
  struct Key {
    std::size_t nt;
    std::vector<std::tuple<std::size_t, int, int>> word;
    auto operator<=>(const Key&) const = default;
  };
  auto key_of = [](const Signature& s) {
    Key k{index(s.nt), {}};
    for (const auto& t : s.word) k.word.emplace_back(index(t.term), t.line, t.col);
    return k;
  };

  std::set<Key> seen;
  std::deque<Signature> queue;
  auto push = [&](Signature s) {
    if (seen.insert(key_of(s)).second) queue.push_back(std::move(s));
  };
  push(from);
  while (!queue.empty()) {
    auto cur = std::move(queue.front());
    queue.pop_front();
    if (cur == to) return true;
    const auto& w = cur.word;
    for (auto pi : g.productions_of(cur.nt)) {
      const auto& rhs = g.production(pi).rhs;
      if (auto* u = std::get_if<UnaryClause>(&rhs)) {
        if (!u->constraint || eval_unary(*u->constraint, w)) push({u->child, w});
      } else if (auto* b = std::get_if<BinaryClause>(&rhs)) {
        for (std::size_t s = 0; s <= w.size(); ++s) {
          auto w1 = w.subword({0, s});
          auto w2 = w.subword({s, w.size() - s});
          if (b->constraint && !eval_binary(*b->constraint, w1, w2)) continue;
          if (derives(g, b->right, w2)) push({b->left, w1});
          if (derives(g, b->left, w1)) push({b->right, w2});
        }
      }
    }
  }
  return false;
}

bool ReachSet::contains(Nonterminal a, std::size_t x, std::size_t delta) const {
  if (index(a) >= nonterminals || x + delta > k) return false;
  if (delta == 0) x = 0;
  return reached[(index(a) * (k + 1) + x) * (k + 1) + delta];
}

ReachSet reachable_set(const Grammar& g, Nonterminal a, const Sentence& w) {
  ReachSet out;
  out.k = w.size();
  out.nonterminals = g.symbols().nonterminal_count();
  const auto k = out.k;
  out.reached.assign(out.nonterminals * (k + 1) * (k + 1), false);
  ParseChart chart(g, w, 1);
  auto tokens = w.tokens();

  std::deque<std::tuple<Nonterminal, std::size_t, std::size_t>> queue;
  auto push = [&](Nonterminal b, std::size_t x, std::size_t delta) {
    if (delta == 0) x = 0;
    auto slot = (index(b) * (k + 1) + x) * (k + 1) + delta;
    if (!out.reached[slot]) {
      out.reached[slot] = true;
      queue.emplace_back(b, x, delta);
    }
  };
  push(a, 0, k);
  while (!queue.empty()) {
    auto [cur, x, delta] = queue.front();
    queue.pop_front();
    for (auto pi : g.productions_of(cur)) {
      const auto& rhs = g.production(pi).rhs;
      if (auto* u = std::get_if<UnaryClause>(&rhs)) {
        if (!u->constraint || eval_unary(*u->constraint, tokens.subspan(x, delta))) push(u->child, x, delta);
      } else if (auto* b = std::get_if<BinaryClause>(&rhs)) {
        for (std::size_t s = 0; s <= delta; ++s) {
          if (b->constraint &&
              !eval_binary(*b->constraint, tokens.subspan(x, s), tokens.subspan(x + s, delta - s)))
            continue;
          if (chart.derives(b->right, x + s, delta - s)) push(b->left, x, s);
          if (chart.derives(b->left, x, s)) push(b->right, x + s, delta - s);
        }
      }
    }
  }
  return out;
}

}  // namespace layit
