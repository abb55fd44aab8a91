#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>

#include "layit/ebnf.hpp"
#include "layit/smt.hpp"

namespace layit::testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string grammar_path(const std::string& name) { return std::string(LAYIT_GRAMMAR_DIR) + "/" + name; }

inline EbnfGrammar load_ebnf(const std::string& name) { return parse_ebnf(read_file(grammar_path(name))); }

inline Grammar load(const std::string& name) { return desugar(load_ebnf(name)); }

inline Grammar from_text(std::string_view text) { return desugar(parse_ebnf(text)); }

inline smt::SolverConfig solver() {
  smt::SolverConfig c;
  const char* env = std::getenv("LAYIT_SMT_SOLVER");
  c.binary = env && *env ? env : LAYIT_TEST_SOLVER;
  return c;
}

inline Nonterminal nt(const Grammar& g, std::string_view name) {
  auto a = g.symbols().find_nonterminal(name);
  if (!a) throw Error("no nonterminal " + std::string(name));
  return *a;
}

inline Terminal term(const Grammar& g, std::string_view name) {
  auto t = g.symbols().find_terminal(name);
  if (!t) throw Error("no terminal " + std::string(name));
  return *t;
}

inline std::string terminals_of(const Sentence& w, const SymbolTable& symbols) {
  std::string out;
  for (const auto& t : w) {
    if (!out.empty()) out += ' ';
    out += symbols.name(t.term);
  }
  return out;
}

// S -> aligned(A, B); A -> C | C'; C -> a; C' -> a; B -> b
inline Grammar gs() {
  return GrammarBuilder()
      .binary("S", "A", "B", BinaryConstraint::Align)
      .unary("A", "C")
      .unary("A", "C'")
      .atom("C", "a")
      .atom("C'", "a")
      .atom("B", "b")
      .start("S")
      .build();
}

inline Sentence sentence(const Grammar& g, std::initializer_list<std::tuple<const char*, int, int>> tokens) {
  std::vector<PositionedToken> out;
  for (const auto& [name, line, col] : tokens) out.push_back({term(g, name), line, col});
  return Sentence(std::move(out));
}

}  // namespace layit::testing
