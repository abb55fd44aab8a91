#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace layit {

enum class Terminal : std::uint32_t {};
enum class Nonterminal : std::uint32_t {};

constexpr std::size_t index(Terminal t) { return static_cast<std::size_t>(t); }
constexpr std::size_t index(Nonterminal a) { return static_cast<std::size_t>(a); }

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class UnaryConstraint { Offside, OffsideAlign, Single };
enum class BinaryConstraint { Align, Indent };

inline constexpr UnaryConstraint kUnaryConstraints[] = {
    UnaryConstraint::Offside, UnaryConstraint::OffsideAlign, UnaryConstraint::Single};
inline constexpr BinaryConstraint kBinaryConstraints[] = {BinaryConstraint::Align,
                                                          BinaryConstraint::Indent};

// Names used in grammar files and JSON.
std::string_view name(UnaryConstraint c);
std::string_view name(BinaryConstraint c);
std::optional<UnaryConstraint> unary_constraint_from_name(std::string_view s);
std::optional<BinaryConstraint> binary_constraint_from_name(std::string_view s);

}  // namespace layit
