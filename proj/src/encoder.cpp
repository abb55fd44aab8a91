#include "layit/encoder.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>

#include "layit/layout.hpp"

namespace layit {

using smt::Formula;

SmtVarMap::SmtVarMap(std::size_t k, std::size_t nonterminals) : k_(k), n_(nonterminals) {
  for (std::size_t i = 0; i < k; ++i) {
    tok_.push_back(smt::int_var("tok_" + std::to_string(i)));
    line_.push_back(smt::int_var("line_" + std::to_string(i)));
    col_.push_back(smt::int_var("col_" + std::to_string(i)));
  }
  auto placeholder = smt::false_();
  derive_.assign(n_ * k_ * k_, placeholder);
  reach_.assign(n_ * k_ * k_, placeholder);
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t x = 0; x < k_; ++x) {
      for (std::size_t d = 1; x + d <= k_; ++d) {
        auto suffix = std::to_string(a) + "_" + std::to_string(x) + "_" + std::to_string(d);
        derive_[span_slot(Nonterminal(a), x, d)] = smt::bool_var("D_" + suffix);
        reach_[span_slot(Nonterminal(a), x, d)] = smt::bool_var("R_" + suffix);
      }
    }
    reach_empty_.push_back(smt::bool_var("Re_" + std::to_string(a)));
  }
}

std::size_t SmtVarMap::span_slot(Nonterminal a, std::size_t x, std::size_t delta) const {
  if (index(a) >= n_ || delta == 0 || x + delta > k_) throw Error("variable index out of range");
  return (index(a) * k_ + x) * k_ + (delta - 1);
}

const Formula& SmtVarMap::derive(Nonterminal a, std::size_t x, std::size_t delta) const {
  return derive_[span_slot(a, x, delta)];
}

const Formula& SmtVarMap::reach(Nonterminal a, std::size_t x, std::size_t delta) const {
  return reach_[span_slot(a, x, delta)];
}

std::vector<smt::Declaration> SmtVarMap::declarations() const {
  std::vector<smt::Declaration> out;
  for (std::size_t i = 0; i < k_; ++i) {
    out.push_back({tok_[i].name(), smt::Sort::Int});
    out.push_back({line_[i].name(), smt::Sort::Int});
    out.push_back({col_[i].name(), smt::Sort::Int});
  }
  for (std::size_t a = 0; a < n_; ++a) {
    for (std::size_t x = 0; x < k_; ++x) {
      for (std::size_t d = 1; x + d <= k_; ++d) {
        out.push_back({derive(Nonterminal(a), x, d).name(), smt::Sort::Bool});
        out.push_back({reach(Nonterminal(a), x, d).name(), smt::Sort::Bool});
      }
    }
    out.push_back({reach_empty_[a].name(), smt::Sort::Bool});
  }
  return out;
}

namespace {

// D[B][x][δ], or nullable(B) when δ = 0.
Formula derive_or_null(const Grammar& g, const SmtVarMap& vars, Nonterminal b, std::size_t x, std::size_t delta) {
  if (delta == 0) return smt::bool_const(g.nullable(b));
  return vars.derive(b, x, delta);
}

Formula unary_layout(const std::optional<UnaryConstraint>& c, std::size_t x, std::size_t delta,
                     const SmtVarMap& vars) {
  if (!c) return smt::true_();
  return encode_unary(*c, x, delta, vars.positions());
}

Formula binary_layout(const std::optional<BinaryConstraint>& c, std::size_t x, std::size_t split,
                      std::size_t delta, const SmtVarMap& vars) {
  if (!c) return smt::true_();
  return encode_binary(*c, x, split, delta, vars.positions());
}

Formula token_is(const SmtVarMap& vars, std::size_t x, Terminal t) {
  return smt::eq(vars.tok(x), smt::int_const(static_cast<std::int64_t>(index(t))));
}

}  // namespace

Formula encode_derive(const Grammar& g, const SmtVarMap& vars) {
  const auto k = vars.k();
  std::vector<Formula> out;
  for (std::size_t a = 0; a < g.symbols().nonterminal_count(); ++a) {
    const auto A = Nonterminal(a);
    for (std::size_t x = 0; x < k; ++x) {
      for (std::size_t delta = 1; x + delta <= k; ++delta) {
        std::vector<Formula> ways;
        for (auto pi : g.productions_of(A)) {
          const auto& rhs = g.production(pi).rhs;
          if (auto* at = std::get_if<AtomClause>(&rhs)) {
            if (delta == 1) ways.push_back(token_is(vars, x, at->term));
          } else if (auto* u = std::get_if<UnaryClause>(&rhs)) {
            ways.push_back(smt::conjunction({vars.derive(u->child, x, delta),
                                             unary_layout(u->constraint, x, delta, vars)}));
          } else if (auto* b = std::get_if<BinaryClause>(&rhs)) {
            if (g.nullable(b->left)) ways.push_back(vars.derive(b->right, x, delta));
            if (g.nullable(b->right)) ways.push_back(vars.derive(b->left, x, delta));
            for (std::size_t split = 1; split < delta; ++split) {
              ways.push_back(smt::conjunction({vars.derive(b->left, x, split),
                                               vars.derive(b->right, x + split, delta - split),
                                               binary_layout(b->constraint, x, split, delta, vars)}));
            }
          }
        }
        out.push_back(smt::iff(vars.derive(A, x, delta), smt::disjunction(std::move(ways))));
      }
    }
  }
  return smt::conjunction(std::move(out));
}

Formula encode_reach_empty(const Grammar& g, Nonterminal start, const SmtVarMap& vars) {
  const auto k = vars.k();
  const auto n = g.symbols().nonterminal_count();
  std::vector<std::vector<Formula>> ways(n);
  if (k == 0) ways[index(start)].push_back(smt::true_());

  for (const auto& p : g.productions()) {
    if (auto* u = std::get_if<UnaryClause>(&p.rhs)) {
      ways[index(u->child)].push_back(vars.reach_empty(p.lhs));
    } else if (auto* b = std::get_if<BinaryClause>(&p.rhs)) {
      // B empty on either side, with the sibling B' covering the whole span.
      auto add_side = [&](Nonterminal side, Nonterminal sibling) {
        auto& w = ways[index(side)];
        if (g.nullable(sibling)) w.push_back(vars.reach_empty(p.lhs));
        for (std::size_t x = 0; x < k; ++x)
          for (std::size_t delta = 1; x + delta <= k; ++delta)
            w.push_back(smt::conjunction({vars.reach(p.lhs, x, delta), vars.derive(sibling, x, delta)}));
      };
      add_side(b->left, b->right);
      if (b->right != b->left) add_side(b->right, b->left);
    }
  }

  std::vector<Formula> out;
  for (std::size_t a = 0; a < n; ++a)
    out.push_back(smt::iff(vars.reach_empty(Nonterminal(a)), smt::disjunction(std::move(ways[a]))));
  return smt::conjunction(std::move(out));
}

Formula encode_reach(const Grammar& g, Nonterminal start, const SmtVarMap& vars) {
  const auto k = vars.k();
  const auto n = g.symbols().nonterminal_count();
  std::vector<Formula> out;
  for (std::size_t bi = 0; bi < n; ++bi) {
    const auto B = Nonterminal(bi);
    for (std::size_t x = 0; x < k; ++x) {
      for (std::size_t delta = 1; x + delta <= k; ++delta) {
        std::vector<Formula> ways;
        if (B == start && x == 0 && delta == k) ways.push_back(smt::true_());
        for (const auto& p : g.productions()) {
          if (auto* u = std::get_if<UnaryClause>(&p.rhs)) {
            if (u->child != B) continue;
            ways.push_back(
                smt::conjunction({vars.reach(p.lhs, x, delta), unary_layout(u->constraint, x, delta, vars)}));
          } else if (auto* b = std::get_if<BinaryClause>(&p.rhs)) {
            if (b->left == B) {
              for (std::size_t extra = 0; x + delta + extra <= k; ++extra) {
                ways.push_back(smt::conjunction(
                    {vars.reach(p.lhs, x, delta + extra), derive_or_null(g, vars, b->right, x + delta, extra),
                     binary_layout(b->constraint, x, delta, delta + extra, vars)}));
              }
            }
            if (b->right == B) {
              for (std::size_t extra = 0; extra <= x; ++extra) {
                ways.push_back(smt::conjunction(
                    {vars.reach(p.lhs, x - extra, extra + delta), derive_or_null(g, vars, b->left, x - extra, extra),
                     binary_layout(b->constraint, x - extra, extra, extra + delta, vars)}));
              }
            }
          }
        }
        out.push_back(smt::iff(vars.reach(B, x, delta), smt::disjunction(std::move(ways))));
      }
    }
  }
  return smt::conjunction(std::move(out));
}

std::vector<UsingClause> using_clauses(const Grammar& g, Nonterminal a, std::size_t delta) {
  std::vector<UsingClause> out;
  for (auto pi : g.productions_of(a)) {
    const auto& rhs = g.production(pi).rhs;
    UsingClause c;
    if (std::holds_alternative<EmptyClause>(rhs)) {
      if (delta != 0) continue;
      c.kind = UsingClause::Kind::Eps;
      out.push_back(c);
    } else if (auto* at = std::get_if<AtomClause>(&rhs)) {
      if (delta != 1) continue;
      c.kind = UsingClause::Kind::Atom;
      c.term = at->term;
      out.push_back(c);
    } else if (auto* u = std::get_if<UnaryClause>(&rhs)) {
      c.kind = UsingClause::Kind::Unary;
      c.first = u->child;
      c.unary = u->constraint;
      out.push_back(c);
    } else if (auto* b = std::get_if<BinaryClause>(&rhs)) {
      c.kind = UsingClause::Kind::Binary;
      c.first = b->left;
      c.second = b->right;
      c.binary = b->constraint;
      for (std::size_t split = 0; split <= delta; ++split) {
        c.split = split;
        out.push_back(c);
      }
    }
  }
  return out;
}

Formula encode_using(const Grammar& g, const UsingClause& gamma, std::size_t x, std::size_t delta,
                     const SmtVarMap& vars) {
  switch (gamma.kind) {
    case UsingClause::Kind::Eps:
      return smt::bool_const(delta == 0);
    case UsingClause::Kind::Atom:
      if (delta != 1) return smt::false_();
      return token_is(vars, x, gamma.term);
    case UsingClause::Kind::Unary:
      if (delta == 0) return smt::bool_const(g.nullable(gamma.first));
      return smt::conjunction({vars.derive(gamma.first, x, delta), unary_layout(gamma.unary, x, delta, vars)});
    case UsingClause::Kind::Binary:
      if (gamma.split > delta) return smt::false_();
      return smt::conjunction({binary_layout(gamma.binary, x, gamma.split, delta, vars),
                               derive_or_null(g, vars, gamma.first, x, gamma.split),
                               derive_or_null(g, vars, gamma.second, x + gamma.split, delta - gamma.split)});
  }
  return smt::false_();
}

Formula encode_multi(const Grammar& g, Nonterminal a, std::size_t x, std::size_t delta, const SmtVarMap& vars) {
  std::vector<Formula> encoded;
  for (const auto& gamma : using_clauses(g, a, delta)) {
    auto f = encode_using(g, gamma, x, delta, vars);
    if (!f.is_false()) encoded.push_back(std::move(f));
  }
  std::vector<Formula> pairs;
  for (std::size_t i = 0; i < encoded.size(); ++i)
    for (std::size_t j = i + 1; j < encoded.size(); ++j) pairs.push_back(smt::conjunction({encoded[i], encoded[j]}));
  return smt::disjunction(std::move(pairs));
}

Formula encode_wellformed(const SymbolTable& symbols, const SmtVarMap& vars, WidthMode widths) {
  const auto k = vars.k();
  std::vector<Formula> out;
  if (k == 0) return smt::true_();
  auto one = smt::int_const(1);
  out.push_back(smt::ge(vars.line(0), one));
  out.push_back(smt::ge(vars.col(0), one));
  const auto terminals = static_cast<std::int64_t>(symbols.terminal_count());
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(smt::ge(vars.tok(i), smt::int_const(0)));
    out.push_back(smt::lt(vars.tok(i), smt::int_const(terminals)));
  }

  // Terminals grouped by width, for the true-width case split.
  std::map<std::size_t, std::vector<Terminal>> by_width;
  for (std::size_t t = 0; t < symbols.terminal_count(); ++t) by_width[symbols.width(Terminal(t))].push_back(Terminal(t));

  for (std::size_t i = 0; i + 1 < k; ++i) {
    auto next_line = smt::conjunction({smt::gt(vars.line(i + 1), vars.line(i)), smt::ge(vars.col(i + 1), one)});
    auto same_line = smt::eq(vars.line(i + 1), vars.line(i));
    Formula room = smt::gt(vars.col(i + 1), vars.col(i));
    if (widths == WidthMode::True && !by_width.empty()) {
      std::vector<Formula> cases;
      for (const auto& [w, terms] : by_width) {
        auto gap = smt::ge(vars.col(i + 1), smt::add(vars.col(i), static_cast<std::int64_t>(w) + 1));
        if (by_width.size() == 1) {
          cases.push_back(gap);
          break;
        }
        std::vector<Formula> is;
        for (auto t : terms) is.push_back(token_is(vars, i, t));
        cases.push_back(smt::implies(smt::disjunction(std::move(is)), gap));
      }
      room = smt::conjunction(std::move(cases));
    }
    out.push_back(smt::disjunction({next_line, smt::conjunction({same_line, room})}));
  }
  return smt::conjunction(std::move(out));
}

Encoding encode_amb(const Grammar& g, std::size_t k, Nonterminal start, WidthMode widths) {
  if (k == 0) throw Error("encode_amb needs k >= 1");
  if (index(start) >= g.symbols().nonterminal_count()) throw Error("unknown start symbol");
  if (!g.acyclic()) throw Error("grammar is cyclic:\n" + describe(cycle_report(g), g));
  if (auto diags = validate(g); !diags.empty()) throw Error("invalid grammar: " + diags.front().message);

  Encoding enc{SmtVarMap(k, g.symbols().nonterminal_count()), smt::true_(), smt::true_(), {}};
  const auto& vars = enc.vars;
  enc.base = smt::conjunction({encode_derive(g, vars), encode_reach_empty(g, start, vars),
                               encode_reach(g, start, vars), encode_wellformed(g.symbols(), vars, widths)});

  std::vector<Formula> top;
  for (auto h : *g.topo_order()) {
    auto empty = smt::conjunction({vars.reach_empty(h), encode_multi(g, h, 0, 0, vars)});
    if (!empty.is_false()) {
      enc.disjuncts.push_back({h, 0, 0, empty});
      top.push_back(empty);
    }
    for (std::size_t x = 0; x < k; ++x) {
      for (std::size_t delta = 1; x + delta <= k; ++delta) {
        auto f = smt::conjunction({vars.reach(h, x, delta), encode_multi(g, h, x, delta, vars)});
        if (f.is_false()) continue;
        enc.disjuncts.push_back({h, x, delta, f});
        top.push_back(f);
      }
    }
  }
  enc.formula = smt::conjunction({enc.base, smt::disjunction(std::move(top))});
  return enc;
}

// --- decoding ---------------------------------------------------------------

namespace {

std::atomic<std::size_t> g_decoded{0};

}  // namespace

std::size_t decoded_witness_count() { return g_decoded.load(); }

Sentence decode_sentence(const smt::Model& model, const SmtVarMap& vars) {
  std::vector<PositionedToken> tokens;
  for (std::size_t i = 0; i < vars.k(); ++i) {
    tokens.push_back({Terminal(static_cast<std::uint32_t>(model.integer(vars.tok(i).name()))),
                      static_cast<int>(model.integer(vars.line(i).name())),
                      static_cast<int>(model.integer(vars.col(i).name()))});
  }
  return Sentence(std::move(tokens));
}

AmbiguityWitness decode_model(const smt::Model& model, const Encoding& enc, const Grammar& g, Nonterminal start,
                              std::size_t tree_cap) {
  AmbiguityWitness w;
  w.sentence = decode_sentence(model, enc.vars);
  w.k = w.sentence.size();
  w.start = start;
  for (const auto& t : w.sentence)
    if (index(t.term) >= g.symbols().terminal_count()) throw SoundnessViolation("model assigns an unknown token");

  bool found = false;
  for (const auto& d : enc.disjuncts) {
    if (smt::holds(d.formula, model)) {
      w.signature_nt = d.nt;
      w.signature_x = d.x;
      w.signature_delta = d.delta;
      found = true;
      break;
    }
  }
  if (!found) throw SoundnessViolation("no top-level disjunct holds in the model");

  ++g_decoded;
  auto pair = ambiguous(g, start, w.sentence);
  if (!pair)
    throw SoundnessViolation("decoded sentence is not ambiguous: " + describe(w.sentence, g.symbols()));
  w.dissimilar = *pair;
  w.trees = all_parses(g, start, w.sentence, tree_cap + 1);
  if (w.trees.size() > tree_cap) {
    w.more_trees = true;
    w.trees.resize(tree_cap);
  }
  return w;
}

std::optional<AmbiguityWitness> empty_ambiguity(const Grammar& g, Nonterminal start) {
  Sentence empty;
  auto pair = ambiguous(g, start, empty);
  if (!pair) return std::nullopt;
  AmbiguityWitness w;
  w.start = start;
  w.signature_nt = start;
  w.dissimilar = *pair;
  w.trees = all_parses(g, start, empty, kDisplayedTreeCap + 1);
  if (w.trees.size() > kDisplayedTreeCap) {
    w.more_trees = true;
    w.trees.resize(kDisplayedTreeCap);
  }
  return w;
}

CheckResult find_shortest_ambiguous(const Grammar& g, const CheckOptions& options,
                                    const std::function<void(const ProgressEvent&)>& progress,
                                    std::stop_token stop) {
  using clock = std::chrono::steady_clock;
  auto ms = [](clock::duration d) { return std::chrono::duration_cast<std::chrono::milliseconds>(d); };

  if (options.from_k < 1 || options.bound < options.from_k)
    throw Error("need bound >= from_k >= 1");
  auto start = options.start.value_or(g.start());
  if (index(start) >= g.symbols().nonterminal_count()) throw Error("unknown start symbol");
  if (!g.acyclic()) throw Error("grammar is cyclic:\n" + describe(cycle_report(g), g));

  CheckResult result;
  auto emit = [&](const ProgressEvent& e) {
    result.history.push_back(e);
    if (progress) progress(e);
  };

  if (options.from_k == 1) {
    if (auto w = empty_ambiguity(g, start)) {
      result.witness = std::move(w);
      return result;
    }
  }

  for (auto k = options.from_k; k <= options.bound; ++k) {
    if (stop.stop_requested()) throw smt::Cancelled();
    ProgressEvent ev;
    ev.k = k;
    ev.status = ProgressEvent::Status::Encoding;
    if (progress) progress(ev);

    auto t0 = clock::now();
    auto enc = encode_amb(g, k, start, options.widths);
    auto decls = enc.vars.declarations();
    auto script = smt::to_smtlib(enc.formula, decls);
    ev.encode_time = ms(clock::now() - t0);
    ev.formula_nodes = smt::count_nodes(enc.formula);

    if (!options.dump_dir.empty()) {
      std::filesystem::create_directories(options.dump_dir);
      std::ofstream(std::filesystem::path(options.dump_dir) / ("k" + std::to_string(k) + ".smt2")) << script;
    }

    ev.status = ProgressEvent::Status::Solving;
    if (progress) progress(ev);

    smt::SolveResult solved;
    try {
      solved = smt::solve(script, decls, options.solver, stop);
    } catch (const smt::SolverError& e) {
      result.aborted = true;
      result.abort_reason = std::string(e.what()) + (e.stderr_text().empty() ? "" : ": " + e.stderr_text());
      return result;
    }
    ev.solve_time = solved.elapsed;

    if (solved.answer == smt::Answer::Unknown) {
      ev.status = ProgressEvent::Status::Unknown;
      emit(ev);
      result.aborted = true;
      result.abort_reason = "solver returned unknown at k = " + std::to_string(k);
      return result;
    }
    if (solved.answer == smt::Answer::Unsat) {
      ev.status = ProgressEvent::Status::Unsat;
      emit(ev);
      result.last_completed_k = k;
      continue;
    }

    ev.status = ProgressEvent::Status::Sat;
    emit(ev);
    result.last_completed_k = k;
    if (!smt::holds(enc.formula, solved.model)) throw smt::SolverError("solver model does not satisfy the formula");
    auto witness = decode_model(solved.model, enc, g, start);
    witness.stats = {ev.formula_nodes, ev.encode_time, ev.solve_time};
    result.witness = std::move(witness);
    return result;
  }
  return result;
}

}  // namespace layit
