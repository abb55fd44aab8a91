#include "layit/json.hpp"

namespace layit {

namespace {

Terminal terminal_named(const Json& j, const SymbolTable& symbols) {
  auto name = j.get<std::string>();
  auto t = symbols.find_terminal(name);
  if (!t) throw Error("unknown terminal '" + name + "'");
  return *t;
}

Nonterminal nonterminal_named(const Json& j, const SymbolTable& symbols) {
  auto name = j.get<std::string>();
  auto a = symbols.find_nonterminal(name);
  if (!a) throw Error("unknown nonterminal '" + name + "'");
  return *a;
}

const char* kind_name(ParseTree::Kind k) {
  switch (k) {
    case ParseTree::Kind::Eps:
      return "eps";
    case ParseTree::Kind::Token:
      return "token";
    case ParseTree::Kind::Unary:
      return "unary";
    case ParseTree::Kind::Binary:
      return "binary";
  }
  return "?";
}

}  // namespace

Json token_to_json(const PositionedToken& tk, const SymbolTable& symbols) {
  return Json{{"term", symbols.name(tk.term)}, {"line", tk.line}, {"col", tk.col}};
}

PositionedToken token_from_json(const Json& j, const SymbolTable& symbols) {
  return {terminal_named(j.at("term"), symbols), j.at("line").get<int>(), j.at("col").get<int>()};
}

Json sentence_to_json(const Sentence& w, const SymbolTable& symbols) {
  auto out = Json::array();
  for (const auto& tk : w) out.push_back(token_to_json(tk, symbols));
  return out;
}

Sentence sentence_from_json(const Json& j, const SymbolTable& symbols) {
  std::vector<PositionedToken> tokens;
  for (const auto& t : j) tokens.push_back(token_from_json(t, symbols));
  return Sentence(std::move(tokens));
}

Json tree_to_json(const ParseTree& t, const SymbolTable& symbols) {
  Json out{{"nt", symbols.name(t.root())}, {"kind", kind_name(t.kind())}};
  if (t.kind() == ParseTree::Kind::Token) out["token"] = token_to_json(t.tok(), symbols);
  auto children = Json::array();
  for (const auto& c : t.children()) children.push_back(tree_to_json(*c, symbols));
  out["children"] = std::move(children);
  return out;
}

TreePtr tree_from_json(const Json& j, const SymbolTable& symbols) {
  auto root = nonterminal_named(j.at("nt"), symbols);
  auto kind = j.at("kind").get<std::string>();
  const auto& children = j.at("children");
  if (kind == "eps") return ParseTree::eps(root);
  if (kind == "token") return ParseTree::token(root, token_from_json(j.at("token"), symbols));
  if (kind == "unary" && children.size() == 1) return ParseTree::unary(root, tree_from_json(children[0], symbols));
  if (kind == "binary" && children.size() == 2)
    return ParseTree::binary(root, tree_from_json(children[0], symbols), tree_from_json(children[1], symbols));
  throw Error("malformed tree node of kind '" + kind + "'");
}

Json witness_to_json(const AmbiguityWitness& w, const Grammar& g, WidthMode widths) {
  const auto& symbols = g.symbols();
  auto trees = Json::array();
  for (const auto& t : w.trees) trees.push_back(tree_to_json(*t, symbols));
  return Json{
      {"k", w.k},
      {"start", symbols.name(w.start)},
      {"sentence", sentence_to_json(w.sentence, symbols)},
      {"text", render(w.sentence, widths, symbols)},
      {"signature", {{"nt", symbols.name(w.signature_nt)}, {"x", w.signature_x}, {"delta", w.signature_delta}}},
      {"trees", std::move(trees)},
      {"more_trees", w.more_trees},
      {"dissimilar",
       Json::array({tree_to_json(*w.dissimilar.first, symbols), tree_to_json(*w.dissimilar.second, symbols)})},
      {"stats",
       {{"formula_nodes", w.stats.formula_nodes},
        {"encode_ms", w.stats.encode_time.count()},
        {"solve_ms", w.stats.solve_time.count()}}},
  };
}

AmbiguityWitness witness_from_json(const Json& j, const Grammar& g) {
  const auto& symbols = g.symbols();
  AmbiguityWitness w;
  w.k = j.at("k").get<std::size_t>();
  w.start = nonterminal_named(j.at("start"), symbols);
  w.sentence = sentence_from_json(j.at("sentence"), symbols);
  const auto& sig = j.at("signature");
  w.signature_nt = nonterminal_named(sig.at("nt"), symbols);
  w.signature_x = sig.at("x").get<std::size_t>();
  w.signature_delta = sig.at("delta").get<std::size_t>();
  for (const auto& t : j.at("trees")) w.trees.push_back(tree_from_json(t, symbols));
  w.more_trees = j.value("more_trees", false);
  const auto& d = j.at("dissimilar");
  w.dissimilar = {tree_from_json(d.at(0), symbols), tree_from_json(d.at(1), symbols)};
  if (auto it = j.find("stats"); it != j.end()) {
    w.stats.formula_nodes = it->value("formula_nodes", std::size_t{0});
    w.stats.encode_time = std::chrono::milliseconds(it->value("encode_ms", std::int64_t{0}));
    w.stats.solve_time = std::chrono::milliseconds(it->value("solve_ms", std::int64_t{0}));
  }
  for (const auto& t : w.trees)
    if (!(t->word() == w.sentence)) throw Error("stored tree does not span the stored sentence");
  return w;
}

Json candidate_to_json(const TransformRule& r, const CandidateSet& cands, const EbnfGrammar& surface,
                       const Grammar& g) {
  auto shown = display(r, surface, g);
  return Json{
      {"id", r.id()},
      {"rule", shown.rule},
      {"constraint", std::string(name(r.constraint))},
      {"ls2nf_target", r.production},
      {"ls2nf_text", to_string(g.production(r.production), g.symbols())},
      {"exercised", cands.exercised.count(r.production) > 0},
      {"liftable", shown.liftable},
  };
}

}  // namespace layit
