#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "layit/ebnf.hpp"
#include "layit/encoder.hpp"
#include "layit/grammar.hpp"
#include "layit/oracle.hpp"

namespace layit {

using AnyConstraint = std::variant<UnaryConstraint, BinaryConstraint>;

std::string_view name(const AnyConstraint& c);
std::optional<AnyConstraint> constraint_from_name(std::string_view s);

// Attach `constraint` to the layout-free production `production`.
struct TransformRule {
  std::size_t production = 0;
  AnyConstraint constraint;

  // "p<production>-<constraint>"
  std::string id() const;
  bool operator==(const TransformRule&) const = default;
};

std::optional<TransformRule> parse_rule_id(std::string_view id);

struct CandidateSet {
  std::map<std::size_t, std::vector<TransformRule>> per_rule;
  // Productions used by some feedback tree.
  std::set<std::size_t> exercised;

  bool all_empty() const;
  std::size_t size() const;
  bool contains(const TransformRule& r) const;
  // Grammar rule order, then align, indent, offside, offside_align, single.
  std::vector<TransformRule> ordered() const;
};

struct FeedbackItem {
  std::size_t tree_index = 0;
  Sentence sentence;
};

CandidateSet init_candidates(const Grammar& g);

// Each item re-decorates the leaves of witness.trees[tree_index] with the
// positions of its sentence, left to right.
std::vector<TreePtr> feedback_trees(const AmbiguityWitness& witness, std::span<const FeedbackItem> feedback);

TreePtr redecorate(const TreePtr& tree, const Sentence& w);

// Removes every candidate falsified by some node of some tree.
CandidateSet filter_candidates(CandidateSet cands, const Grammar& g, std::span<const TreePtr> trees);

struct Inconsistent {};
using SynthesisResult = std::variant<CandidateSet, Inconsistent>;

SynthesisResult synthesize(const Grammar& g, const AmbiguityWitness& witness, std::span<const FeedbackItem> feedback);

// Throws on an empty selection, two rules for one production, or a target
// that already carries a constraint.
Grammar apply_rules(const Grammar& g, std::span<const TransformRule> accepted);

bool is_refinement(const Grammar& g, const Grammar& g2);

// Surface rendering of a candidate: the rewritten EBNF rule it corresponds
// to, or the LS2NF production when the constraint has no surface form.
struct CandidateDisplay {
  std::string rule;
  bool liftable = true;
};
CandidateDisplay display(const TransformRule& r, const EbnfGrammar& surface, const Grammar& g);

}  // namespace layit
