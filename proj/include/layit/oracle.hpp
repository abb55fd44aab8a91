#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "layit/grammar.hpp"
#include "layit/sentence.hpp"

namespace layit {

class ParseTree;
using TreePtr = std::shared_ptr<const ParseTree>;

// ε^A | tk^A | A(t) | A(t1, t2). Each node caches the word it spans.
class ParseTree {
public:
  enum class Kind { Eps, Token, Unary, Binary };

  static TreePtr eps(Nonterminal root);
  static TreePtr token(Nonterminal root, PositionedToken tk);
  static TreePtr unary(Nonterminal root, TreePtr child);
  static TreePtr binary(Nonterminal root, TreePtr left, TreePtr right);

  Kind kind() const { return kind_; }
  Nonterminal root() const { return root_; }
  const PositionedToken& tok() const { return *token_; }
  const std::vector<TreePtr>& children() const { return children_; }
  const Sentence& word() const { return word_; }

  std::size_t size() const;

  // Left-to-right token leaves.
  std::vector<PositionedToken> leaves() const;

private:
  ParseTree(Kind kind, Nonterminal root) : kind_(kind), root_(root) {}

  Kind kind_;
  Nonterminal root_;
  std::optional<PositionedToken> token_;
  std::vector<TreePtr> children_;
  Sentence word_;
};

// Structural equality: kind, root, token positions, children.
bool equal(const ParseTree& a, const ParseTree& b);

struct Signature {
  Nonterminal nt;
  Sentence word;
  bool operator==(const Signature&) const = default;
};

// Rule membership plus constraint fulfilment at every node.
bool valid(const ParseTree& t, const Grammar& g);

// Same kind and root, and the children agree pairwise on (root, word).
// Children's internal structure is not compared.
bool similar(const ParseTree& a, const ParseTree& b);

// Tree counts for every (A, x, delta) over one sentence, saturated at `cap`.
// Spans of length zero are position independent and stored once per nonterminal.
class ParseChart {
public:
  ParseChart(const Grammar& g, const Sentence& w, std::size_t cap = 2);

  std::size_t count(Nonterminal a, std::size_t x, std::size_t delta) const;
  bool derives(Nonterminal a, std::size_t x, std::size_t delta) const { return count(a, x, delta) > 0; }
  std::size_t cap() const { return cap_; }
  std::size_t length() const { return k_; }

private:
  std::size_t slot(Nonterminal a, std::size_t x, std::size_t delta) const;

  const Grammar& g_;
  const Sentence& w_;
  std::size_t k_;
  std::size_t cap_;
  std::vector<std::size_t> counts_;
};

// All distinct valid trees with root `a` and word `w`, at most `cap`, ordered
// by production index and then split point. Requires an acyclic grammar.
std::vector<TreePtr> all_parses(const Grammar& g, Nonterminal a, const Sentence& w, std::size_t cap = 16);

bool derives(const Grammar& g, Nonterminal a, const Sentence& w);

// Number of trees for (a, w) saturated at `cap`, without building them.
std::size_t count_parses(const Grammar& g, Nonterminal a, const Sentence& w, std::size_t cap = 2);

using TreePair = std::pair<TreePtr, TreePtr>;

// Depth-first comparison returning the first dissimilar pair; absent when equal.
std::optional<TreePair> tree_diff(const TreePtr& t1, const TreePtr& t2);

// A dissimilar pair with a common signature, if (a, w) has two or more trees.
std::optional<TreePair> ambiguous(const Grammar& g, Nonterminal a, const Sentence& w);

// Reflexive transitive closure of one-step reachability, by exhaustive search.
bool reachable_bf(const Grammar& g, const Signature& from, const Signature& to);

// Every (B, x, delta) reachable from (a, w) over subwords of w. delta = 0
// entries use x = 0.
struct ReachSet {
  std::size_t k = 0;
  std::size_t nonterminals = 0;
  std::vector<bool> reached;  // index: (a * (k + 1) + x) * (k + 1) + delta

  bool contains(Nonterminal a, std::size_t x, std::size_t delta) const;
};
ReachSet reachable_set(const Grammar& g, Nonterminal a, const Sentence& w);

}  // namespace layit
