#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "layit/core.hpp"

namespace layit {

// Terminal and nonterminal names plus the start symbol. Terminal display width
// is the code point count of its name.
class SymbolTable {
public:
  Terminal add_terminal(std::string name);
  Nonterminal add_nonterminal(std::string name);

  std::optional<Terminal> find_terminal(std::string_view name) const;
  std::optional<Nonterminal> find_nonterminal(std::string_view name) const;

  const std::string& name(Terminal t) const { return terminals_.at(index(t)); }
  const std::string& name(Nonterminal a) const { return nonterminals_.at(index(a)); }
  std::size_t width(Terminal t) const;

  std::size_t terminal_count() const { return terminals_.size(); }
  std::size_t nonterminal_count() const { return nonterminals_.size(); }

  Nonterminal start() const { return start_; }
  void set_start(Nonterminal a) { start_ = a; }

private:
  std::vector<std::string> terminals_;
  std::vector<std::string> nonterminals_;
  std::unordered_map<std::string, std::uint32_t> terminal_index_;
  std::unordered_map<std::string, std::uint32_t> nonterminal_index_;
  Nonterminal start_{0};
};

struct EmptyClause {
  bool operator==(const EmptyClause&) const = default;
};
struct AtomClause {
  Terminal term;
  bool operator==(const AtomClause&) const = default;
};
struct UnaryClause {
  Nonterminal child;
  std::optional<UnaryConstraint> constraint;
  bool operator==(const UnaryClause&) const = default;
};
struct BinaryClause {
  Nonterminal left;
  Nonterminal right;
  std::optional<BinaryConstraint> constraint;
  bool operator==(const BinaryClause&) const = default;
};

using Clause = std::variant<EmptyClause, AtomClause, UnaryClause, BinaryClause>;

// Where a production came from in the surface grammar. `node` is the id of the
// expression node; for sequence productions `suffix` is the index of the first
// sequence item covered.
struct Origin {
  enum class Role { Alternative, SequenceSuffix, ListBase, ListCons, Synthetic };
  Role role = Role::Synthetic;
  int rule = -1;
  int node = -1;
  int suffix = 0;
  bool operator==(const Origin&) const = default;
};

struct Production {
  Nonterminal lhs;
  Clause rhs;
  Origin origin;
};

bool has_constraint(const Clause& c);
std::string to_string(const Clause& c, const SymbolTable& symbols);
std::string to_string(const Production& p, const SymbolTable& symbols);

// A layout-sensitive grammar in binary normal form. Immutable once built;
// nullability and (when acyclic) a topological order are computed eagerly.
class Grammar {
public:
  Grammar(SymbolTable symbols, std::vector<Production> productions);

  const SymbolTable& symbols() const { return symbols_; }
  Nonterminal start() const { return symbols_.start(); }
  std::span<const Production> productions() const { return productions_; }
  const Production& production(std::size_t i) const { return productions_.at(i); }
  std::span<const std::size_t> productions_of(Nonterminal a) const { return by_lhs_.at(index(a)); }

  bool nullable(Nonterminal a) const { return nullable_.at(index(a)); }
  const std::vector<bool>& nullable_set() const { return nullable_; }

  // Predecessors come first: every graph edge (A, B) has A before B.
  const std::optional<std::vector<Nonterminal>>& topo_order() const { return topo_order_; }
  bool acyclic() const { return topo_order_.has_value(); }

  std::optional<std::size_t> find_unary(Nonterminal lhs, Nonterminal child) const;
  std::optional<std::size_t> find_binary(Nonterminal lhs, Nonterminal left, Nonterminal right) const;
  bool has_atom(Nonterminal lhs, Terminal t) const;
  bool has_empty(Nonterminal lhs) const;

  Grammar with_start(Nonterminal start) const;

private:
  SymbolTable symbols_;
  std::vector<Production> productions_;
  std::vector<std::vector<std::size_t>> by_lhs_;
  std::vector<bool> nullable_;
  std::optional<std::vector<Nonterminal>> topo_order_;
};

// Least fixpoint of the nullable predicate; constraints hold vacuously on ε.
std::vector<bool> compute_nullable(const SymbolTable& symbols, std::span<const Production> productions);

struct GrammarGraph {
  std::size_t node_count = 0;
  std::vector<std::vector<Nonterminal>> successors;

  bool has_edge(Nonterminal from, Nonterminal to) const;
  std::size_t edge_count() const;
};

GrammarGraph build_graph(const Grammar& g);

struct CycleReport {
  // One entry per strongly connected component that is a cycle: its members
  // and the production indices whose edges stay inside it.
  struct Component {
    std::vector<Nonterminal> members;
    std::vector<std::size_t> productions;
  };
  std::vector<Component> components;
};

using AcyclicResult = std::variant<std::vector<Nonterminal>, CycleReport>;

AcyclicResult check_acyclic(const GrammarGraph& graph);
CycleReport cycle_report(const Grammar& g);
std::string describe(const CycleReport& report, const Grammar& g);

struct Diagnostic {
  std::string message;
  std::vector<std::size_t> productions;
};

std::vector<Diagnostic> validate(const Grammar& g);

// Programmatic construction, mainly for tests and generated grammars.
class GrammarBuilder {
public:
  Terminal terminal(std::string_view name);
  Nonterminal nonterminal(std::string_view name);

  GrammarBuilder& empty(std::string_view lhs);
  GrammarBuilder& atom(std::string_view lhs, std::string_view term);
  GrammarBuilder& unary(std::string_view lhs, std::string_view child,
                        std::optional<UnaryConstraint> c = std::nullopt);
  GrammarBuilder& binary(std::string_view lhs, std::string_view left, std::string_view right,
                         std::optional<BinaryConstraint> c = std::nullopt);
  GrammarBuilder& start(std::string_view name);

  Grammar build() const;

private:
  SymbolTable symbols_;
  std::vector<Production> productions_;
  bool start_set_ = false;
};

}  // namespace layit
