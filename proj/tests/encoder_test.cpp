#include <gtest/gtest.h>

#include <random>

#include "layit/encoder.hpp"
#include "random_grammar.hpp"
#include "support.hpp"

using namespace layit;
using namespace layit::testing;

TEST(ShortestAmbiguous, BlockGrammar) {
  auto g = load("block.lsg");
  CheckOptions opt;
  opt.bound = 5;
  opt.solver = solver();
  auto r = find_shortest_ambiguous(g, opt);
  ASSERT_FALSE(r.aborted) << r.abort_reason;
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->k, 3u);
  EXPECT_EQ(terminals_of(r.witness->sentence, g.symbols()), "do nop nop");
  EXPECT_EQ(r.witness->trees.size(), 2u);
}

TEST(ShortestAmbiguous, RefinedBlockIsClean) {
  auto g = load("block_refined.lsg");
  CheckOptions opt;
  opt.bound = 8;
  opt.solver = solver();
  auto r = find_shortest_ambiguous(g, opt);
  ASSERT_FALSE(r.aborted) << r.abort_reason;
  EXPECT_FALSE(r.witness);
  EXPECT_EQ(r.last_completed_k, 8u);
}

namespace {

CheckResult check(const std::string& file, std::size_t bound) {
  auto g = load(file);
  CheckOptions opt;
  opt.bound = bound;
  opt.solver = solver();
  return find_shortest_ambiguous(g, opt);
}

}  // namespace

TEST(ShortestAmbiguous, WhileFragment) {
  auto g = load("while.lsg");
  auto r = check("while.lsg", 6);
  ASSERT_TRUE(r.witness);
  EXPECT_EQ(r.witness->k, 5u);
  EXPECT_EQ(terminals_of(r.witness->sentence, g.symbols()), "while e : pass pass");
}

namespace {

using smt::Answer;

smt::SolveResult run(const smt::Formula& f, const std::vector<smt::Declaration>& decls) {
  return smt::solve(smt::to_smtlib(f, decls), decls, solver());
}

// Fixes tok/line/col to the given sentence.
smt::Formula pin(const SmtVarMap& vars, const Sentence& w) {
  std::vector<smt::Formula> parts;
  for (std::size_t i = 0; i < w.size(); ++i) {
    parts.push_back(smt::eq(vars.tok(i), smt::int_const(static_cast<std::int64_t>(index(w[i].term)))));
    parts.push_back(smt::eq(vars.line(i), smt::int_const(w[i].line)));
    parts.push_back(smt::eq(vars.col(i), smt::int_const(w[i].col)));
  }
  return smt::conjunction(std::move(parts));
}

bool has_dissimilar_pair(const std::vector<TreePtr>& trees) {
  for (std::size_t i = 0; i < trees.size(); ++i)
    for (std::size_t j = i + 1; j < trees.size(); ++j)
      if (!similar(*trees[i], *trees[j])) return true;
  return false;
}

}  // namespace

TEST(UsingClauses, Examples) {
  auto g = gs();
  auto clauses = using_clauses(g, nt(g, "A"), 1);
  ASSERT_EQ(clauses.size(), 2u);
  EXPECT_EQ(clauses[0].kind, UsingClause::Kind::Unary);
  EXPECT_EQ(clauses[0].first, nt(g, "C"));
  EXPECT_EQ(clauses[1].first, nt(g, "C'"));

  auto h = GrammarBuilder().binary("A", "B", "C", BinaryConstraint::Indent).atom("B", "b").atom("C", "c").build();
  auto splits = using_clauses(h, nt(h, "A"), 2);
  ASSERT_EQ(splits.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(splits[s].kind, UsingClause::Kind::Binary);
    EXPECT_EQ(splits[s].split, s);
    EXPECT_EQ(splits[s].binary, BinaryConstraint::Indent);
  }
  EXPECT_EQ(using_clauses(h, nt(h, "B"), 1).size(), 1u);
  EXPECT_TRUE(using_clauses(h, nt(h, "B"), 2).empty());
  auto k = GrammarBuilder().atom("A", "a").unary("A", "Z").atom("B", "b").build();
  EXPECT_TRUE(using_clauses(k, nt(k, "Z"), 1).empty());
}

TEST(EncodeUsing, Examples) {
  auto g = GrammarBuilder().atom("S", "a").empty("E").binary("P", "S", "S").build();
  SmtVarMap vars(2, g.symbols().nonterminal_count());
  UsingClause eps;
  EXPECT_TRUE(encode_using(g, eps, 0, 1, vars).is_false());
  UsingClause atom{UsingClause::Kind::Atom, term(g, "a")};
  EXPECT_EQ(smt::to_smtlib_term(encode_using(g, atom, 0, 1, vars)), "(= tok_0 0)");
  UsingClause pair{UsingClause::Kind::Binary, {}, nt(g, "S"), nt(g, "S"), 0};
  EXPECT_TRUE(encode_using(g, pair, 0, 1, vars).is_false());
}

TEST(EncodeMulti, Examples) {
  auto g = gs();
  SmtVarMap vars(2, g.symbols().nonterminal_count());
  auto multi = encode_multi(g, nt(g, "A"), 0, 1, vars);
  EXPECT_EQ(smt::to_smtlib_term(multi),
            smt::to_smtlib_term(smt::conjunction({vars.derive(nt(g, "C"), 0, 1), vars.derive(nt(g, "C'"), 0, 1)})));
  EXPECT_TRUE(encode_multi(g, nt(g, "B"), 1, 1, vars).is_false());

  auto h = GrammarBuilder().binary("A", "B", "B").empty("B").atom("B", "b").build();
  SmtVarMap hv(2, h.symbols().nonterminal_count());
  auto f = encode_multi(h, nt(h, "A"), 0, 2, hv);
  ASSERT_EQ(f.kind(), smt::Kind::Or);
  EXPECT_EQ(f.children().size(), 3u);
}

TEST(EncodeDerive, SingleAtom) {
  GrammarBuilder b;
  b.atom("S", "a");
  b.terminal("b");
  auto grammar = b.build();
  SmtVarMap vars(1, grammar.symbols().nonterminal_count());
  auto base = smt::conjunction({encode_derive(grammar, vars), encode_wellformed(grammar.symbols(), vars, WidthMode::Unit)});
  auto decls = vars.declarations();
  auto a = run(smt::conjunction({base, smt::eq(vars.tok(0), smt::int_const(0))}), decls);
  ASSERT_EQ(a.answer, Answer::Sat);
  EXPECT_TRUE(smt::holds(vars.derive(grammar.start(), 0, 1), a.model));
  auto other = run(smt::conjunction({base, smt::eq(vars.tok(0), smt::int_const(1))}), decls);
  ASSERT_EQ(other.answer, Answer::Sat);
  EXPECT_FALSE(smt::holds(vars.derive(grammar.start(), 0, 1), other.model));
}

TEST(EncodeWellformed, Examples) {
  auto g = load("block.lsg");
  SmtVarMap vars(2, g.symbols().nonterminal_count());
  auto decls = vars.declarations();
  auto pos = [&](int l0, int c0, int l1, int c1) {
    return smt::conjunction({smt::eq(vars.line(0), smt::int_const(l0)), smt::eq(vars.col(0), smt::int_const(c0)),
                             smt::eq(vars.line(1), smt::int_const(l1)), smt::eq(vars.col(1), smt::int_const(c1))});
  };
  auto unit = encode_wellformed(g.symbols(), vars, WidthMode::Unit);
  EXPECT_EQ(run(smt::conjunction({unit, pos(1, 3, 1, 3)}), decls).answer, Answer::Unsat);
  EXPECT_EQ(run(smt::conjunction({unit, pos(1, 3, 1, 4)}), decls).answer, Answer::Sat);
  EXPECT_EQ(run(smt::conjunction({unit, pos(0, 3, 1, 4)}), decls).answer, Answer::Unsat);

  auto wide = encode_wellformed(g.symbols(), vars, WidthMode::True);
  auto is_do = smt::eq(vars.tok(0), smt::int_const(static_cast<std::int64_t>(index(term(g, "do")))));
  EXPECT_EQ(run(smt::conjunction({wide, is_do, pos(1, 1, 1, 3)}), decls).answer, Answer::Unsat);
  EXPECT_EQ(run(smt::conjunction({wide, is_do, pos(1, 1, 1, 4)}), decls).answer, Answer::Sat);
  EXPECT_EQ(run(smt::conjunction({wide, is_do, pos(1, 9, 2, 1)}), decls).answer, Answer::Sat);
}

TEST(EncodeReach, FigureFour) {
  auto g = gs();
  auto enc = encode_amb(g, 2, g.start(), WidthMode::True);
  auto decls = enc.vars.declarations();
  auto at = [&](int col) { return sentence(g, {{"a", 1, 3}, {"b", 2, col}}); };
  auto same = run(smt::conjunction({enc.base, pin(enc.vars, at(3))}), decls);
  ASSERT_EQ(same.answer, Answer::Sat);
  EXPECT_TRUE(smt::holds(enc.vars.reach(nt(g, "A"), 0, 1), same.model));
  EXPECT_TRUE(smt::holds(enc.vars.reach(g.start(), 0, 2), same.model));
  EXPECT_FALSE(smt::holds(enc.vars.reach_empty(nt(g, "A")), same.model));
  auto apart = run(smt::conjunction({enc.base, pin(enc.vars, at(4))}), decls);
  ASSERT_EQ(apart.answer, Answer::Sat);
  EXPECT_FALSE(smt::holds(enc.vars.reach(nt(g, "A"), 0, 1), apart.model));
  EXPECT_TRUE(smt::holds(enc.vars.reach(g.start(), 0, 2), apart.model));
}

TEST(EncodeReach, EmptyContext) {
  auto g = GrammarBuilder()
               .binary("S", "A", "B", BinaryConstraint::Align)
               .empty("B")
               .atom("A", "a")
               .start("S")
               .build();
  auto enc = encode_amb(g, 1, g.start(), WidthMode::True);
  auto decls = enc.vars.declarations();
  auto r = run(smt::conjunction({enc.base, pin(enc.vars, sentence(g, {{"a", 2, 5}}))}), decls);
  ASSERT_EQ(r.answer, Answer::Sat);
  EXPECT_TRUE(smt::holds(enc.vars.reach_empty(nt(g, "B")), r.model));
  EXPECT_TRUE(smt::holds(enc.vars.derive(nt(g, "A"), 0, 1), r.model));
}

TEST(EncodeAmb, FigureFour) {
  auto g = gs();
  auto enc = encode_amb(g, 2, g.start(), WidthMode::True);
  auto decls = enc.vars.declarations();
  auto r = run(enc.formula, decls);
  ASSERT_EQ(r.answer, Answer::Sat);
  EXPECT_EQ(r.model.integer("col_0"), r.model.integer("col_1"));
  auto w = decode_model(r.model, enc, g, g.start());
  EXPECT_EQ(terminals_of(w.sentence, g.symbols()), "a b");
  EXPECT_EQ(w.signature_nt, nt(g, "A"));
  EXPECT_EQ(w.signature_x, 0u);
  EXPECT_EQ(w.signature_delta, 1u);
  auto apart = smt::negation(smt::eq(enc.vars.col(0), enc.vars.col(1)));
  EXPECT_EQ(run(smt::conjunction({enc.formula, apart}), decls).answer, Answer::Unsat);
}

TEST(EncodeAmb, SingleAtomIsUnsat) {
  auto g = GrammarBuilder().atom("S", "a").build();
  for (std::size_t k = 1; k <= 3; ++k) {
    auto enc = encode_amb(g, k, g.start(), WidthMode::True);
    EXPECT_EQ(run(enc.formula, enc.vars.declarations()).answer, Answer::Unsat);
  }
}

TEST(EncodeAmb, RejectsCyclicGrammar) {
  auto g = GrammarBuilder().unary("A", "B").unary("B", "A").atom("A", "a").build();
  EXPECT_THROW(encode_amb(g, 1, g.start(), WidthMode::True), Error);
}

TEST(EncodeAmb, RunningExampleModels) {
  auto g = load("block.lsg");
  auto enc = encode_amb(g, 3, g.start(), WidthMode::True);
  auto decls = enc.vars.declarations();
  auto r = run(enc.formula, decls);
  ASSERT_EQ(r.answer, Answer::Sat);
  auto w = decode_model(r.model, enc, g, g.start());
  EXPECT_EQ(terminals_of(w.sentence, g.symbols()), "do nop nop");
  EXPECT_EQ(w.trees.size(), 2u);
  EXPECT_TRUE(well_formed(w.sentence, WidthMode::True, g.symbols()));
  EXPECT_EQ(smt::holds(enc.vars.derive(g.start(), 0, 3), r.model), derives(g, g.start(), w.sentence));
}

TEST(EmptyAmbiguity, DecidedByOracle) {
  auto g = GrammarBuilder().unary("S", "A").unary("S", "B").empty("A").empty("B").atom("A", "a").build();
  auto w = empty_ambiguity(g, g.start());
  ASSERT_TRUE(w);
  EXPECT_EQ(w->k, 0u);
  EXPECT_GE(w->trees.size(), 2u);
  EXPECT_FALSE(empty_ambiguity(load("block.lsg"), load("block.lsg").start()));
}

// Model values of D, Re, R and Φ_multi against the oracle on the sentence
// the model is pinned to.
TEST(EncodingValues, MatchOracleOnPinnedSentences) {
  std::mt19937 rng(1234);
  for (int round = 0; round < 60; ++round) {
    auto g = random_grammar(rng);
    auto k = 1 + pick(rng, 3);
    auto w = random_grid_sentence(rng, k, 4, 6, 2);
    if (pick(rng, 2) == 0) {
      for (int attempt = 0; attempt < 100 && !derives(g, g.start(), w); ++attempt)
        w = random_grid_sentence(rng, k, 4, 6, 2);
    }
    auto enc = encode_amb(g, k, g.start(), WidthMode::Unit);
    auto r = run(smt::conjunction({enc.base, pin(enc.vars, w)}), enc.vars.declarations());
    ASSERT_EQ(r.answer, Answer::Sat);
    const auto& symbols = g.symbols();
    for (std::size_t a = 0; a < symbols.nonterminal_count(); ++a) {
      auto an = Nonterminal(a);
      ASSERT_EQ(smt::holds(enc.vars.reach_empty(an), r.model), reachable_bf(g, {g.start(), w}, {an, Sentence()}));
      ASSERT_EQ(smt::holds(encode_multi(g, an, 0, 0, enc.vars), r.model),
                has_dissimilar_pair(all_parses(g, an, Sentence(), 256)));
      for (std::size_t x = 0; x < k; ++x)
        for (std::size_t d = 1; x + d <= k; ++d) {
          auto v = w.subword({x, d});
          ASSERT_EQ(smt::holds(enc.vars.derive(an, x, d), r.model), derives(g, an, v)) << round;
          ASSERT_EQ(smt::holds(enc.vars.reach(an, x, d), r.model), reachable_bf(g, {g.start(), w}, {an, v})) << round;
          ASSERT_EQ(smt::holds(encode_multi(g, an, x, d, enc.vars), r.model),
                    has_dissimilar_pair(all_parses(g, an, v, 256)))
              << round;
        }
    }
  }
}
