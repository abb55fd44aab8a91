#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "layit/grammar.hpp"
#include "layit/layout.hpp"
#include "layit/oracle.hpp"
#include "layit/sentence.hpp"
#include "layit/smt.hpp"

namespace layit {

// Solver variables for a bound k:
//   tok_i, line_i, col_i          0 <= i < k        (Int)
//   D_A_x_d, R_A_x_d              0 < d <= k - x    (Bool)
//   Re_A                                            (Bool)
// Nonterminals appear by index, so names are stable for a given grammar.
class SmtVarMap {
public:
  SmtVarMap(std::size_t k, std::size_t nonterminals);

  std::size_t k() const { return k_; }
  std::size_t nonterminals() const { return n_; }

  const smt::Formula& tok(std::size_t i) const { return tok_.at(i); }
  const smt::Formula& line(std::size_t i) const { return line_.at(i); }
  const smt::Formula& col(std::size_t i) const { return col_.at(i); }
  const smt::Formula& derive(Nonterminal a, std::size_t x, std::size_t delta) const;
  const smt::Formula& reach(Nonterminal a, std::size_t x, std::size_t delta) const;
  const smt::Formula& reach_empty(Nonterminal a) const { return reach_empty_.at(index(a)); }

  PositionVars positions() const { return {line_, col_}; }
  std::vector<smt::Declaration> declarations() const;

private:
  std::size_t span_slot(Nonterminal a, std::size_t x, std::size_t delta) const;

  std::size_t k_;
  std::size_t n_;
  std::vector<smt::Formula> tok_, line_, col_;
  std::vector<smt::Formula> derive_, reach_, reach_empty_;
};

// One way of deriving a subword: ε, a terminal, B^φ, or B1^δ' φ B2.
struct UsingClause {
  enum class Kind { Eps, Atom, Unary, Binary };
  Kind kind = Kind::Eps;
  Terminal term{};
  Nonterminal first{};
  Nonterminal second{};
  std::size_t split = 0;
  std::optional<UnaryConstraint> unary;
  std::optional<BinaryConstraint> binary;
  bool operator==(const UsingClause&) const = default;
};

std::vector<UsingClause> using_clauses(const Grammar& g, Nonterminal a, std::size_t delta);

smt::Formula encode_derive(const Grammar& g, const SmtVarMap& vars);
smt::Formula encode_reach_empty(const Grammar& g, Nonterminal start, const SmtVarMap& vars);
smt::Formula encode_reach(const Grammar& g, Nonterminal start, const SmtVarMap& vars);
smt::Formula encode_using(const Grammar& g, const UsingClause& gamma, std::size_t x, std::size_t delta,
                          const SmtVarMap& vars);
smt::Formula encode_multi(const Grammar& g, Nonterminal a, std::size_t x, std::size_t delta,
                          const SmtVarMap& vars);
// Positions ascend; tokens range over the grammar's terminals.
smt::Formula encode_wellformed(const SymbolTable& symbols, const SmtVarMap& vars, WidthMode widths);

// A top-level disjunct of the ambiguity formula: (H, x, delta) with delta = 0
// standing for the ε case.
struct AmbiguityDisjunct {
  Nonterminal nt;
  std::size_t x = 0;
  std::size_t delta = 0;
  smt::Formula formula;
};

struct Encoding {
  SmtVarMap vars;
  smt::Formula formula;  // the whole conjunction
  smt::Formula base;     // derive ∧ reach-ε ∧ reach ∧ well-formedness
  std::vector<AmbiguityDisjunct> disjuncts;
};

// Requires an acyclic, valid grammar and k >= 1; throws Error otherwise.
Encoding encode_amb(const Grammar& g, std::size_t k, Nonterminal start, WidthMode widths);

struct WitnessStats {
  std::size_t formula_nodes = 0;
  std::chrono::milliseconds encode_time{0};
  std::chrono::milliseconds solve_time{0};
};

struct AmbiguityWitness {
  Sentence sentence;
  std::size_t k = 0;
  Nonterminal start{};
  Nonterminal signature_nt{};
  std::size_t signature_x = 0;
  std::size_t signature_delta = 0;
  std::vector<TreePtr> trees;
  bool more_trees = false;
  TreePair dissimilar;
  WitnessStats stats;
};

// Raised when a decoded model is not ambiguous under the oracle.
class SoundnessViolation : public Error {
public:
  using Error::Error;
};

// Number of witnesses decoded (and checked) by this process.
std::size_t decoded_witness_count();

inline constexpr std::size_t kDisplayedTreeCap = 10;

AmbiguityWitness decode_model(const smt::Model& model, const Encoding& enc, const Grammar& g,
                              Nonterminal start, std::size_t tree_cap = kDisplayedTreeCap);

// Sentence assigned by a model to tok/line/col.
Sentence decode_sentence(const smt::Model& model, const SmtVarMap& vars);

// ε ambiguity is decided by the oracle directly.
std::optional<AmbiguityWitness> empty_ambiguity(const Grammar& g, Nonterminal start);

struct CheckOptions {
  std::size_t bound = 10;
  std::size_t from_k = 1;
  std::optional<Nonterminal> start;
  WidthMode widths = WidthMode::True;
  smt::SolverConfig solver;
  std::string dump_dir;  // write k<N>.smt2 here when nonempty
};

struct ProgressEvent {
  std::size_t k = 0;
  std::size_t formula_nodes = 0;
  std::chrono::milliseconds encode_time{0};
  std::chrono::milliseconds solve_time{0};
  enum class Status { Encoding, Solving, Sat, Unsat, Unknown } status = Status::Encoding;
};

struct CheckResult {
  std::optional<AmbiguityWitness> witness;
  // Highest k whose solve finished with sat or unsat; 0 when none did.
  std::size_t last_completed_k = 0;
  bool aborted = false;
  std::string abort_reason;
  std::vector<ProgressEvent> history;
};

// Tries k = from_k..bound with a fresh encoding per k, stopping at the first
// sat. A solver error or unknown answer stops the loop with aborted = true.
CheckResult find_shortest_ambiguous(const Grammar& g, const CheckOptions& options,
                                    const std::function<void(const ProgressEvent&)>& progress = {},
                                    std::stop_token stop = {});

}  // namespace layit
