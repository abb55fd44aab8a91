#include "layit/core.hpp"

namespace layit {

std::string_view name(UnaryConstraint c) {
  switch (c) {
    case UnaryConstraint::Offside: return "offside";
    case UnaryConstraint::OffsideAlign: return "offside_align";
    case UnaryConstraint::Single: return "single";
  }
  return "?";
}

std::string_view name(BinaryConstraint c) {
  switch (c) {
    case BinaryConstraint::Align: return "align";
    case BinaryConstraint::Indent: return "indent";
  }
  return "?";
}

std::optional<UnaryConstraint> unary_constraint_from_name(std::string_view s) {
  for (auto c : kUnaryConstraints)
    if (name(c) == s) return c;
  return std::nullopt;
}

std::optional<BinaryConstraint> binary_constraint_from_name(std::string_view s) {
  for (auto c : kBinaryConstraints)
    if (name(c) == s) return c;
  return std::nullopt;
}

}  // namespace layit
