#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "layit/ebnf.hpp"
#include "layit/layout.hpp"
#include "layit/oracle.hpp"
#include "layit/synthesis.hpp"
#include "random_grammar.hpp"
#include "support.hpp"

using namespace layit;
using namespace layit::testing;

namespace {

std::vector<std::string> production_texts(const Grammar& g) {
  std::vector<std::string> out;
  for (const auto& p : g.productions()) out.push_back(to_string(p, g.symbols()));
  return out;
}

std::string parse_error_of(std::string_view text) {
  try {
    parse_ebnf(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

// Direct interpretation of the surface grammar over a positioned sentence,
// memoized on (node, span). Only used for grammars whose desugaring is
// acyclic, where no node is re-entered on the same span.
class Interpreter {
public:
  Interpreter(const EbnfGrammar& g, const Sentence& w, const SymbolTable& symbols)
      : g_(g), w_(w), symbols_(symbols) {}

  bool accepts() { return match(g_.find(g_.start)->body, 0, w_.size()); }

private:
  bool match(const Expr& e, std::size_t i, std::size_t j) {
    auto key = std::make_tuple(e.id, i, j);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second == 1;
    memo_[key] = 0;
    bool r = compute(e, i, j);
    memo_[key] = r ? 1 : 0;
    return r;
  }

  bool compute(const Expr& e, std::size_t i, std::size_t j) {
    auto sub = [&](std::size_t a, std::size_t b) { return w_.subword({a, b - a}); };
    switch (e.kind) {
      case Expr::Kind::Terminal:
        return j == i + 1 && symbols_.name(w_[i].term) == e.text;
      case Expr::Kind::Ref:
        return match(g_.find(e.text)->body, i, j);
      case Expr::Kind::Alt:
        for (const auto& c : e.children)
          if (match(c, i, j)) return true;
        return false;
      case Expr::Kind::Optional:
        return i == j || match(e.children[0], i, j);
      case Expr::Kind::Seq:
        return seq(e, 0, i, j);
      case Expr::Kind::Unary:
        return match(e.children[0], i, j) && eval_unary(e.unary, sub(i, j));
      case Expr::Kind::Binary:
        for (std::size_t m = i; m <= j; ++m)
          if (match(e.children[0], i, m) && match(e.children[1], m, j) &&
              eval_binary(e.binary, sub(i, m), sub(m, j)))
            return true;
        return false;
      case Expr::Kind::List:
        return list(e, i, j);
    }
    return false;
  }

  bool seq(const Expr& e, std::size_t item, std::size_t i, std::size_t j) {
    if (item == e.children.size()) return i == j;
    for (std::size_t m = i; m <= j; ++m)
      if (match(e.children[item], i, m) && seq(e, item + 1, m, j)) return true;
    return false;
  }

  bool list(const Expr& e, std::size_t i, std::size_t j) {
    auto key = std::make_tuple(-e.id - 1, i, j);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second == 1;
    memo_[key] = 0;
    bool r = e.at_least_one ? match(e.children[0], i, j) : i == j;
    for (std::size_t m = i; !r && m <= j; ++m) {
      if (!match(e.children[0], i, m) || !list(e, m, j)) continue;
      if (!e.separator || eval_binary(*e.separator, w_.subword({i, m - i}), w_.subword({m, j - m}))) r = true;
    }
    memo_[key] = r ? 1 : 0;
    return r;
  }

  const EbnfGrammar& g_;
  const Sentence& w_;
  const SymbolTable& symbols_;
  std::map<std::tuple<int, std::size_t, std::size_t>, int> memo_;
};

class RandomSurface {
public:
  explicit RandomSurface(unsigned seed) : rng_(seed) {}

  std::string grammar() {
    rules_ = 1 + pick(rng_, 4);
    std::string out = "start r0;\n";
    for (std::size_t r = 0; r < rules_; ++r) out += "r" + std::to_string(r) + ": " + expr(3) + ";\n";
    return out;
  }

private:
  std::string expr(int depth) {
    auto roll = pick(rng_, depth <= 0 ? 2 : 10);
    switch (roll) {
      case 0:
        return std::string("\"") + "ab"[pick(rng_, 2)] + "\"";
      case 1:
        return "r" + std::to_string(pick(rng_, rules_));
      case 2:
        return "(" + expr(depth - 1) + " " + expr(depth - 1) + ")";
      case 3:
        return expr(depth - 1) + " " + expr(depth - 1) + " " + expr(depth - 1);
      case 4:
        return "(" + expr(depth - 1) + " | " + expr(depth - 1) + ")";
      case 5:
        return "(" + expr(depth - 1) + ")?";
      case 6:
        return "(" + expr(depth - 1) + (coin(rng_, 0.5) ? ")+" : ")*");
      case 7: {
        std::string kind = coin(rng_, 0.5) ? "aligned" : "indented";
        return kind + (coin(rng_, 0.5) ? "+(" : "*(") + expr(depth - 1) + ")";
      }
      case 8: {
        const char* names[] = {"offside", "offside_align", "single"};
        return std::string(names[pick(rng_, 3)]) + "(" + expr(depth - 1) + ")";
      }
      default:
        return std::string(coin(rng_, 0.5) ? "aligned(" : "indented(") + expr(depth - 1) + ", " + expr(depth - 1) +
               ")";
    }
  }

  std::mt19937 rng_;
  std::size_t rules_ = 1;
};

}  // namespace

TEST(Parse, RunningExample) {
  auto g = parse_ebnf("start block; block: stmt+; stmt: \"nop\" | \"do\" block;");
  EXPECT_EQ(g.start, "block");
  ASSERT_EQ(g.rules.size(), 2u);
  EXPECT_EQ(g.rules[0].body.kind, Expr::Kind::List);
  EXPECT_TRUE(g.rules[0].body.at_least_one);
  EXPECT_EQ(g.rules[1].body.kind, Expr::Kind::Alt);
}

TEST(Parse, ListAnnotation) {
  auto g = parse_ebnf("s: aligned+(\"a\");");
  const auto& body = g.rules[0].body;
  EXPECT_EQ(body.kind, Expr::Kind::List);
  EXPECT_EQ(body.separator, BinaryConstraint::Align);
  EXPECT_EQ(g.start, "s");
}

TEST(Parse, Errors) {
  EXPECT_EQ(parse_error_of(""), "1:1: no start symbol");
  EXPECT_EQ(parse_error_of("# only a comment\n"), "2:1: no start symbol");
  EXPECT_EQ(parse_error_of("start x;\ns: \"a\";"), "1:1: start symbol 'x' has no rule");
  EXPECT_EQ(parse_error_of("s: t;"), "1:4: undefined nonterminal 't'");
  EXPECT_EQ(parse_error_of("s: \"a\";\ns: \"b\";"), "2:1: duplicate rule for 's'");
  EXPECT_EQ(parse_error_of("s: wobbly(\"a\");"), "1:4: unknown annotation 'wobbly'");
  EXPECT_EQ(parse_error_of("s: \"\";"), "1:4: empty terminal");
  EXPECT_EQ(parse_error_of("s: \"a b\";"), "1:4: terminal contains whitespace");
  EXPECT_EQ(parse_error_of("s: \"a\""), "1:7: expected ';'");
  EXPECT_EQ(parse_error_of("start s; start t; s: \"a\"; t: \"b\";"), "1:10: conflicting start declarations");
}

TEST(Parse, PrintRoundTrip) {
  for (auto file : {"block.lsg", "block_refined.lsg", "while.lsg", "while_refined.lsg", "let.lsg", "where.lsg",
                    "aligned_pair.lsg"}) {
    auto g = load_ebnf(file);
    auto again = parse_ebnf(print_ebnf(g));
    EXPECT_TRUE(g.same_shape(again)) << file << "\n" << print_ebnf(g);
    EXPECT_EQ(print_ebnf(again), print_ebnf(g));
  }
}

TEST(Parse, PrintRoundTripOnRandomGrammars) {
  RandomSurface gen(8);
  for (int i = 0; i < 300; ++i) {
    auto text = gen.grammar();
    auto g = parse_ebnf(text);
    auto printed = print_ebnf(g);
    ASSERT_TRUE(g.same_shape(parse_ebnf(printed))) << text << "\n---\n" << printed;
  }
}

TEST(Desugar, RunningExample) {
  auto g = load("block.lsg");
  EXPECT_EQ(production_texts(g),
            (std::vector<std::string>{"block~2 -> stmt", "block~1 -> block~2", "block~1 -> block~2 block~1",
                                      "block -> block~1", "stmt -> \"nop\"", "stmt~1 -> \"do\"",
                                      "stmt -> stmt~1 block"}));
}

TEST(Desugar, Optional) {
  EXPECT_EQ(production_texts(from_text("s: \"a\"?;")), (std::vector<std::string>{"s -> ε", "s -> \"a\""}));
}

TEST(Desugar, AlignedListSeparator) {
  auto g = from_text("s: aligned+(t); t: \"x\";");
  EXPECT_EQ(production_texts(g), (std::vector<std::string>{"s~2 -> t", "s~1 -> s~2", "s~1 -> aligned(s~2, s~1)",
                                                           "s -> s~1", "t -> \"x\""}));
  auto x = term(g, "x");
  EXPECT_TRUE(derives(g, g.start(), Sentence({{x, 1, 3}, {x, 2, 3}})));
  EXPECT_FALSE(derives(g, g.start(), Sentence({{x, 1, 3}, {x, 2, 4}})));
}

TEST(Desugar, NamesAreDeterministic) {
  auto text = read_file(grammar_path("let.lsg"));
  EXPECT_EQ(production_texts(from_text(text)), production_texts(from_text(text)));
}

TEST(Desugar, OriginsResolve) {
  RandomSurface gen(31);
  for (int i = 0; i < 200; ++i) {
    auto surface = parse_ebnf(gen.grammar());
    auto g = desugar(surface);
    for (const auto& p : g.productions()) {
      ASSERT_GE(p.origin.rule, 0);
      ASSERT_LT(p.origin.rule, static_cast<int>(surface.rules.size()));
      EXPECT_FALSE(origin_text(surface, p).empty()) << to_string(p, g.symbols());
    }
  }
}

TEST(Desugar, OriginText) {
  auto surface = load_ebnf("while.lsg");
  auto g = desugar(surface);
  std::map<std::string, std::string> by_production;
  for (const auto& p : g.productions()) by_production[to_string(p, g.symbols())] = origin_text(surface, p);
  EXPECT_EQ(by_production["while-test -> while-test~1 while-test~2"], "\"while\" \"e\" \":\"");
  EXPECT_EQ(by_production["while-test~2 -> while-test~3 while-test~4"], "\"e\" \":\"");
  EXPECT_EQ(by_production["block -> block~1"], "stmt+");
}

// Surface interpretation and LS2NF derivability agree on every short
// sentence of a small grid.
TEST(Desugar, PreservesLanguage) {
  RandomSurface gen(77);
  std::vector<Sentence> sentences;
  for (std::size_t k = 0; k <= 3; ++k)
    for (auto& w : grid_sentences(k, 3, 6, 2)) sentences.push_back(std::move(w));
  int grammars = 0;
  std::size_t accepted = 0;
  while (grammars < 60) {
    auto surface = parse_ebnf(gen.grammar());
    auto g = desugar(surface);
    if (!g.acyclic() || !validate(g).empty()) continue;
    ++grammars;
    // Terminals are numbered by first use; map the grid's a/b onto them.
    SymbolTable symbols = g.symbols();
    Terminal names[] = {symbols.add_terminal("a"), symbols.add_terminal("b")};
    auto known = g.symbols().terminal_count();
    for (const auto& w : sentences) {
      std::vector<PositionedToken> tokens(w.begin(), w.end());
      for (auto& t : tokens) t.term = names[index(t.term)];
      Sentence v(std::move(tokens));
      bool expected = Interpreter(surface, v, symbols).accepts();
      bool actual = std::all_of(v.begin(), v.end(), [&](const auto& t) { return index(t.term) < known; }) &&
                    derives(g, g.start(), v);
      ASSERT_EQ(actual, expected) << print_ebnf(surface) << describe(v, symbols);
      accepted += expected;
    }
  }
  EXPECT_GT(accepted, 1000u);
}

TEST(Lift, RunningExampleRefinement) {
  auto surface = load_ebnf("block.lsg");
  auto g = desugar(surface);
  std::vector<ConstraintAttachment> atts{{2, BinaryConstraint::Align}, {0, UnaryConstraint::Offside}};
  auto lifted = lift_constraints(surface, g, atts);
  EXPECT_EQ(print_ebnf(lifted), "start block;\nblock: aligned+(offside(stmt));\nstmt: \"nop\" | \"do\" block;\n");
  EXPECT_TRUE(same_productions(desugar(lifted), load("block_refined.lsg")));
}

TEST(Lift, SequenceSuffix) {
  auto surface = load_ebnf("while.lsg");
  auto g = desugar(surface);
  auto p = g.find_binary(nt(g, "while-stmt"), nt(g, "while-test"), nt(g, "block"));
  ASSERT_TRUE(p);
  std::vector<ConstraintAttachment> atts{{*p, BinaryConstraint::Indent}};
  auto lifted = lift_constraints(surface, g, atts);
  EXPECT_EQ(print_expr(lifted.find("while-stmt")->body), "indented(while-test, block)");
}

TEST(Lift, ListBaseUnaryIsRejected) {
  auto surface = load_ebnf("block.lsg");
  auto g = desugar(surface);
  std::vector<ConstraintAttachment> atts{{1, UnaryConstraint::Offside}};
  EXPECT_THROW(lift_constraints(surface, g, atts), Error);
}

// Lifting any set of liftable attachments and desugaring again gives the
// same grammar as attaching them directly.
TEST(Lift, RoundTripOnRandomGrammars) {
  RandomSurface gen(4242);
  std::mt19937 rng(4242);
  int checked = 0;
  while (checked < 300) {
    auto surface = parse_ebnf(gen.grammar());
    auto g = desugar(surface);
    if (!validate(g).empty()) continue;
    std::vector<TransformRule> rules;
    for (std::size_t i = 0; i < g.productions().size(); ++i) {
      if (!coin(rng, 0.5)) continue;
      const auto& p = g.production(i);
      std::optional<AnyConstraint> c;
      if (auto* u = std::get_if<UnaryClause>(&p.rhs); u && !u->constraint) c = kUnaryConstraints[pick(rng, 3)];
      if (auto* b = std::get_if<BinaryClause>(&p.rhs); b && !b->constraint) c = kBinaryConstraints[pick(rng, 2)];
      if (!c) continue;
      TransformRule r{i, *c};
      if (display(r, surface, g).liftable) rules.push_back(r);
    }
    if (rules.empty()) continue;
    Grammar refined = apply_rules(g, rules);
    std::vector<ConstraintAttachment> atts;
    for (const auto& r : rules) atts.push_back({r.production, r.constraint});
    auto lifted = lift_constraints(surface, g, atts);
    auto again = desugar(parse_ebnf(print_ebnf(lifted)));
    ASSERT_TRUE(same_productions(refined, again)) << print_ebnf(surface) << "---\n" << print_ebnf(lifted);
    ASSERT_TRUE(is_refinement(g, again)) << print_ebnf(lifted);
    ++checked;
  }
}

TEST(Lift, DuplicateAlternativesAreAllRewritten) {
  auto surface = parse_ebnf("s: t | \"a\" | t; t: \"x\";");
  auto g = desugar(surface);
  auto p = g.find_unary(nt(g, "s"), nt(g, "t"));
  ASSERT_TRUE(p);
  std::vector<ConstraintAttachment> atts{{*p, UnaryConstraint::Single}};
  auto lifted = lift_constraints(surface, g, atts);
  EXPECT_EQ(print_expr(lifted.find("s")->body), "single(t) | \"a\" | single(t)");
  EXPECT_TRUE(validate(desugar(lifted)).empty());
}
