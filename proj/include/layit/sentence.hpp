#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layit/core.hpp"

namespace layit {

class SymbolTable;

struct PositionedToken {
  Terminal term;
  int line = 1;
  int col = 1;
  bool operator==(const PositionedToken&) const = default;
};

// How much horizontal room a token takes. Unit treats every token as one
// column wide; True uses the terminal name's length.
enum class WidthMode { Unit, True };

struct SubwordIndex {
  std::size_t x = 0;
  std::size_t delta = 0;
};

// A sequence of positioned tokens. Word-level operations never reorder or
// reposition tokens.
class Sentence {
public:
  Sentence() = default;
  explicit Sentence(std::vector<PositionedToken> tokens) : tokens_(std::move(tokens)) {}

  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const PositionedToken& operator[](std::size_t i) const { return tokens_[i]; }
  const PositionedToken& head() const { return tokens_.front(); }
  const PositionedToken& last() const { return tokens_.back(); }
  std::span<const PositionedToken> tokens() const { return tokens_; }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  Sentence subword(SubwordIndex idx) const;
  Sentence concat(const Sentence& other) const;
  std::vector<Terminal> terminals() const;

  bool operator==(const Sentence&) const = default;

private:
  std::vector<PositionedToken> tokens_;
};

// Positions strictly ascend by (line, col). In true-width mode a same-line
// successor must also start at least one blank column after its predecessor
// ends, so that rendered text splits back into the same chunks.
bool well_formed(const Sentence& w);
bool well_formed(const Sentence& w, WidthMode mode, const SymbolTable& symbols);

// Whitespace-separated chunks become tokens at their 1-based (line, col).
Sentence parse_formatted_text(std::string_view text, const SymbolTable& symbols);

// Inverse of parse_formatted_text in true-width mode. Unit mode spreads
// columns apart with a monotone map so that every column comparison between
// tokens is preserved.
std::string render(const Sentence& w, WidthMode mode, const SymbolTable& symbols);

// "do@(1,1) nop@(1,4)" style, for diagnostics.
std::string describe(const Sentence& w, const SymbolTable& symbols);

}  // namespace layit
