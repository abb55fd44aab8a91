#include "layit/sentence.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "layit/grammar.hpp"

namespace layit {

namespace {

bool continuation_byte(char c) { return (static_cast<unsigned char>(c) & 0xC0) == 0x80; }

}  // namespace

Sentence Sentence::subword(SubwordIndex idx) const {
  if (idx.x + idx.delta > tokens_.size()) throw Error("subword out of range");
  auto first = tokens_.begin() + static_cast<std::ptrdiff_t>(idx.x);
  return Sentence({first, first + static_cast<std::ptrdiff_t>(idx.delta)});
}

Sentence Sentence::concat(const Sentence& other) const {
  auto tokens = tokens_;
  tokens.insert(tokens.end(), other.tokens_.begin(), other.tokens_.end());
  return Sentence(std::move(tokens));
}

std::vector<Terminal> Sentence::terminals() const {
  std::vector<Terminal> out;
  out.reserve(tokens_.size());
  for (const auto& t : tokens_) out.push_back(t.term);
  return out;
}

bool well_formed(const Sentence& w) {
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i].line < 1 || w[i].col < 1) return false;
    if (i == 0) continue;
    const auto& p = w[i - 1];
    const auto& t = w[i];
    if (t.line < p.line || (t.line == p.line && t.col <= p.col)) return false;
  }
  return true;
}

bool well_formed(const Sentence& w, WidthMode mode, const SymbolTable& symbols) {
  if (!well_formed(w)) return false;
  if (mode == WidthMode::Unit) return true;
  for (std::size_t i = 1; i < w.size(); ++i) {
    const auto& p = w[i - 1];
    const auto& t = w[i];
    if (t.line == p.line && t.col < p.col + static_cast<int>(symbols.width(p.term)) + 1) return false;
  }
  return true;
}

Sentence parse_formatted_text(std::string_view text, const SymbolTable& symbols) {
  std::vector<PositionedToken> tokens;
  int line = 1;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto row = text.substr(pos, end - pos);
    if (!row.empty() && row.back() == '\r') row.remove_suffix(1);

    int col = 1;
    std::size_t i = 0;
    while (i < row.size()) {
      char c = row[i];
      if (c == '\t') throw Error("tab at line " + std::to_string(line) + ", column " + std::to_string(col));
      if (c == ' ') {
        ++i;
        ++col;
        continue;
      }
      std::size_t j = i;
      int width = 0;
      while (j < row.size() && row[j] != ' ' && row[j] != '\t') {
        if (!continuation_byte(row[j])) ++width;
        ++j;
      }
      std::string chunk(row.substr(i, j - i));
      auto term = symbols.find_terminal(chunk);
      if (!term)
        throw Error("unknown token '" + chunk + "' at line " + std::to_string(line) + ", column " +
                    std::to_string(col));
      tokens.push_back({*term, line, col});
      col += width;
      i = j;
    }
    if (end == text.size()) break;
    pos = end + 1;
    ++line;
  }
  return Sentence(std::move(tokens));
}

std::string render(const Sentence& w, WidthMode mode, const SymbolTable& symbols) {
  if (!well_formed(w)) throw Error("cannot render a sentence whose positions do not ascend");
  std::vector<PositionedToken> placed(w.begin(), w.end());

  if (mode == WidthMode::Unit) {
    // Columns are remapped in ascending order, each far enough right of every
    // same-line predecessor.
    std::set<int> columns;
    for (const auto& t : w) columns.insert(t.col);
    std::map<int, std::vector<std::size_t>> at_column;
    for (std::size_t i = 0; i < w.size(); ++i) at_column[w[i].col].push_back(i);
    std::map<int, int> remap;
    int previous = 0;
    for (int c : columns) {
      int target = remap.empty() ? c : previous + 1;
      for (auto i : at_column[c]) {
        if (i > 0 && w[i - 1].line == w[i].line) {
          const auto& p = w[i - 1];
          target = std::max(target, remap.at(p.col) + static_cast<int>(symbols.width(p.term)) + 1);
        }
      }
      remap[c] = target;
      previous = target;
    }
    for (auto& t : placed) t.col = remap.at(t.col);
  } else if (!well_formed(w, WidthMode::True, symbols)) {
    throw Error("tokens overlap or touch: " + describe(w, symbols));
  }

  std::ostringstream out;
  int line = 1;
  int col = 1;
  for (const auto& t : placed) {
    while (line < t.line) {
      out << '\n';
      ++line;
      col = 1;
    }
    out << std::string(static_cast<std::size_t>(t.col - col), ' ') << symbols.name(t.term);
    col = t.col + static_cast<int>(symbols.width(t.term));
  }
  return out.str();
}

std::string describe(const Sentence& w, const SymbolTable& symbols) {
  std::ostringstream out;
  bool first = true;
  for (const auto& t : w) {
    if (!first) out << ' ';
    first = false;
    out << symbols.name(t.term) << "@(" << t.line << ',' << t.col << ')';
  }
  return out.str();
}

}  // namespace layit
