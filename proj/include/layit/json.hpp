#pragma once

#include <json.hpp>

#include "layit/encoder.hpp"
#include "layit/grammar.hpp"
#include "layit/oracle.hpp"
#include "layit/sentence.hpp"
#include "layit/synthesis.hpp"

namespace layit {

using Json = nlohmann::ordered_json;

Json token_to_json(const PositionedToken& tk, const SymbolTable& symbols);
PositionedToken token_from_json(const Json& j, const SymbolTable& symbols);

Json sentence_to_json(const Sentence& w, const SymbolTable& symbols);
Sentence sentence_from_json(const Json& j, const SymbolTable& symbols);

// {"nt", "kind": "eps"|"token"|"unary"|"binary", "token"?: {term, line, col}, "children"}
Json tree_to_json(const ParseTree& t, const SymbolTable& symbols);
TreePtr tree_from_json(const Json& j, const SymbolTable& symbols);

Json witness_to_json(const AmbiguityWitness& w, const Grammar& g, WidthMode widths);
AmbiguityWitness witness_from_json(const Json& j, const Grammar& g);

// {"id", "rule", "constraint", "ls2nf_target", "exercised", "liftable"}
Json candidate_to_json(const TransformRule& r, const CandidateSet& cands, const EbnfGrammar& surface,
                       const Grammar& g);

}  // namespace layit
