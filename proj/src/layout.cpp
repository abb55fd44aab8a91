#include "layit/layout.hpp"

namespace layit {

bool eval_unary(UnaryConstraint c, std::span<const PositionedToken> w) {
  if (w.empty()) return true;
  const auto& hd = w.front();
  for (const auto& t : w.subspan(1)) {
    switch (c) {
      case UnaryConstraint::Offside:
        if (t.line > hd.line && t.col <= hd.col) return false;
        break;
      case UnaryConstraint::OffsideAlign:
        if (t.line > hd.line && t.col < hd.col) return false;
        break;
      case UnaryConstraint::Single:
        if (t.line != hd.line) return false;
        break;
    }
  }
  return true;
}

bool eval_binary(BinaryConstraint c, std::span<const PositionedToken> w1, std::span<const PositionedToken> w2) {
  if (w1.empty() || w2.empty()) return true;
  switch (c) {
    case BinaryConstraint::Align:
      return w1.front().col == w2.front().col;
    case BinaryConstraint::Indent:
      return w2.front().col > w1.front().col && w2.front().line == w1.back().line + 1;
  }
  return false;
}

bool eval_unary(UnaryConstraint c, const Sentence& w) { return eval_unary(c, w.tokens()); }

bool eval_binary(BinaryConstraint c, const Sentence& w1, const Sentence& w2) {
  return eval_binary(c, w1.tokens(), w2.tokens());
}

smt::Formula encode_unary(UnaryConstraint c, std::size_t x, std::size_t delta, PositionVars vars) {
  using namespace smt;
  if (delta <= 1) return true_();
  std::vector<Formula> parts;
  const auto& line0 = vars.line[x];
  const auto& col0 = vars.col[x];
  for (std::size_t i = x + 1; i < x + delta; ++i) {
    switch (c) {
      case UnaryConstraint::Offside:
        parts.push_back(implies(gt(vars.line[i], line0), gt(vars.col[i], col0)));
        break;
      case UnaryConstraint::OffsideAlign:
        parts.push_back(implies(gt(vars.line[i], line0), ge(vars.col[i], col0)));
        break;
      case UnaryConstraint::Single:
        parts.push_back(eq(vars.line[i], line0));
        break;
    }
  }
  return conjunction(std::move(parts));
}

smt::Formula encode_binary(BinaryConstraint c, std::size_t x, std::size_t split, std::size_t delta,
                           PositionVars vars) {
  using namespace smt;
  if (split == 0 || split >= delta) return true_();
  auto second = x + split;
  switch (c) {
    case BinaryConstraint::Align:
      return eq(vars.col[x], vars.col[second]);
    case BinaryConstraint::Indent:
      return conjunction({gt(vars.col[second], vars.col[x]), eq(vars.line[second], add(vars.line[second - 1], 1))});
  }
  return false_();
}

}  // namespace layit
