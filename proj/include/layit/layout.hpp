#pragma once

#include <cstddef>
#include <span>

#include "layit/core.hpp"
#include "layit/sentence.hpp"
#include "layit/smt.hpp"

namespace layit {

// Built-in layout predicates. Every predicate holds when an argument is ε.
//   offside(w)       continuation lines start strictly right of hd(w)
//   offside_align(w) continuation lines start at or right of hd(w)
//   single(w)        all tokens on the line of hd(w)
//   align(w1, w2)    col(hd w1) = col(hd w2)
//   indent(w1, w2)   col(hd w2) > col(hd w1) and line(hd w2) = line(tl w1) + 1
bool eval_unary(UnaryConstraint c, const Sentence& w);
bool eval_binary(BinaryConstraint c, const Sentence& w1, const Sentence& w2);

bool eval_unary(UnaryConstraint c, std::span<const PositionedToken> w);
bool eval_binary(BinaryConstraint c, std::span<const PositionedToken> w1,
                 std::span<const PositionedToken> w2);

// Position variables of a k-token sentence.
struct PositionVars {
  std::span<const smt::Formula> line;
  std::span<const smt::Formula> col;
};

// Formula over tokens x..x+delta-1 equivalent to eval_unary on that subword.
smt::Formula encode_unary(UnaryConstraint c, std::size_t x, std::size_t delta, PositionVars vars);

// Formula equivalent to eval_binary(c, w[x, split), w[x+split, x+delta)).
smt::Formula encode_binary(BinaryConstraint c, std::size_t x, std::size_t split, std::size_t delta,
                           PositionVars vars);

}  // namespace layit
