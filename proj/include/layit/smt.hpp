#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "layit/core.hpp"

namespace layit::smt {

enum class Sort { Bool, Int };

enum class Kind { BoolConst, IntConst, Var, And, Or, Not, Implies, Iff, Eq, Le, Lt, Add };

// Immutable formula handle. Construction goes through the free functions
// below, which keep And/Or flat and fold boolean constants away.
class Formula {
public:
  struct Node;

  Kind kind() const;
  Sort sort() const;
  bool bool_value() const;
  std::int64_t int_value() const;
  const std::string& name() const;
  std::span<const Formula> children() const;

  bool is_true() const { return kind() == Kind::BoolConst && bool_value(); }
  bool is_false() const { return kind() == Kind::BoolConst && !bool_value(); }

  const Node* id() const { return node_.get(); }

  explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

private:
  std::shared_ptr<const Node> node_;
};

struct Formula::Node {
  Kind kind;
  Sort sort;
  bool bval = false;
  std::int64_t ival = 0;
  std::string name;
  std::vector<Formula> children;
};

Formula bool_const(bool b);
Formula true_();
Formula false_();
Formula int_const(std::int64_t v);
Formula bool_var(std::string name);
Formula int_var(std::string name);

Formula conjunction(std::vector<Formula> fs);
Formula disjunction(std::vector<Formula> fs);
Formula conjunction(std::initializer_list<Formula> fs);
Formula disjunction(std::initializer_list<Formula> fs);
Formula negation(const Formula& f);
Formula implies(const Formula& a, const Formula& b);
Formula iff(const Formula& a, const Formula& b);
// (c ∧ then) ∨ (¬c ∧ otherwise)
Formula ite(const Formula& c, const Formula& then, const Formula& otherwise);

Formula eq(const Formula& a, const Formula& b);
Formula le(const Formula& a, const Formula& b);
Formula lt(const Formula& a, const Formula& b);
Formula ge(const Formula& a, const Formula& b);
Formula gt(const Formula& a, const Formula& b);
Formula add(std::vector<Formula> terms);
Formula add(const Formula& a, std::int64_t offset);

// AST node count, leaves included. Shared subterms count once per occurrence.
std::size_t count_nodes(const Formula& f);

struct Declaration {
  std::string name;
  Sort sort;
  bool operator==(const Declaration&) const = default;
};

// Free variables in first-occurrence order.
std::vector<Declaration> free_variables(const Formula& f);

std::string to_smtlib_term(const Formula& f);
// A complete QF_LIA script: declarations, one assertion, check-sat, get-model.
std::string to_smtlib(const Formula& f, std::span<const Declaration> decls);

using Value = std::variant<bool, std::int64_t>;

class Model {
public:
  void set(std::string name, Value v) { values_[std::move(name)] = v; }
  std::optional<Value> get(std::string_view name) const;
  bool boolean(std::string_view name) const;
  std::int64_t integer(std::string_view name) const;
  std::size_t size() const { return values_.size(); }
  const std::map<std::string, Value, std::less<>>& values() const { return values_; }

private:
  std::map<std::string, Value, std::less<>> values_;
};

// Native evaluation; unknown variables are an error.
Value evaluate(const Formula& f, const Model& m);
bool holds(const Formula& f, const Model& m);

enum class Answer { Sat, Unsat, Unknown };

struct SolveResult {
  Answer answer = Answer::Unknown;
  Model model;
  std::chrono::milliseconds elapsed{0};
};

class SolverError : public Error {
public:
  SolverError(const std::string& what, std::string stderr_text = {})
      : Error(what), stderr_text_(std::move(stderr_text)) {}
  const std::string& stderr_text() const { return stderr_text_; }

private:
  std::string stderr_text_;
};

class Cancelled : public Error {
public:
  Cancelled() : Error("cancelled") {}
};

struct SolverConfig {
  std::string binary;
  // Zero means no limit. On expiry the subprocess is killed and the answer is Unknown.
  std::chrono::seconds timeout{0};

  // $LAYIT_SMT_SOLVER, falling back to `z3` on PATH.
  static SolverConfig from_environment();
};

// Runs `<binary> <script-file>` and parses the check-sat answer and the model.
// Declared variables missing from the solver's model get default values.
SolveResult solve(const std::string& script, std::span<const Declaration> decls,
                  const SolverConfig& config, std::stop_token stop = {});

// Parses "sat\n(model ...)" style output. Exposed for tests.
SolveResult parse_solver_output(std::string_view out, std::span<const Declaration> decls);

}  // namespace layit::smt
