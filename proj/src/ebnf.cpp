#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "layit/ebnf.hpp"

namespace layit {

ParseError::ParseError(const std::string& message, SourceSpan at)
    : Error(std::to_string(at.line) + ":" + std::to_string(at.col) + ": " + message), message_(message), at_(at) {}

bool Expr::same_shape(const Expr& other) const {
  if (kind != other.kind || text != other.text || children.size() != other.children.size()) return false;
  if (kind == Kind::List && (at_least_one != other.at_least_one || separator != other.separator)) return false;
  if (kind == Kind::Unary && unary != other.unary) return false;
  if (kind == Kind::Binary && binary != other.binary) return false;
  for (std::size_t i = 0; i < children.size(); ++i)
    if (!children[i].same_shape(other.children[i])) return false;
  return true;
}

const EbnfRule* EbnfGrammar::find(std::string_view name) const {
  for (const auto& r : rules)
    if (r.name == name) return &r;
  return nullptr;
}

bool EbnfGrammar::same_shape(const EbnfGrammar& other) const {
  if (start != other.start || rules.size() != other.rules.size()) return false;
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (rules[i].name != other.rules[i].name || !rules[i].body.same_shape(other.rules[i].body)) return false;
  return true;
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '\'';
}

class Parser {
public:
  explicit Parser(std::string_view text) : text_(text) {}

  EbnfGrammar parse() {
    EbnfGrammar g;
    std::optional<SourceSpan> start_at;
    skip();
    while (!done()) {
      auto at = here();
      auto name = identifier("rule name or 'start'");
      skip();
      if (name == "start" && peek() != ':') {
        auto target = identifier("start symbol");
        expect(';');
        if (start_at && g.start != target) throw ParseError("conflicting start declarations", at);
        g.start = target;
        start_at = at;
        continue;
      }
      expect(':');
      if (g.find(name)) throw ParseError("duplicate rule for '" + name + "'", at);
      EbnfRule rule{name, alternation(), at};
      expect(';');
      g.rules.push_back(std::move(rule));
    }
    if (g.rules.empty()) throw ParseError("no start symbol", here());
    if (g.start.empty()) g.start = g.rules.front().name;
    if (!g.find(g.start)) throw ParseError("start symbol '" + g.start + "' has no rule", start_at.value_or(here()));
    for (const auto& r : g.rules) check_refs(g, r.body);
    number_nodes(g);
    return g;
  }

private:
  void check_refs(const EbnfGrammar& g, const Expr& e) {
    if (e.kind == Expr::Kind::Ref && !g.find(e.text))
      throw ParseError("undefined nonterminal '" + e.text + "'", e.span);
    for (const auto& c : e.children) check_refs(g, c);
  }

  Expr alternation() {
    skip();
    auto at = here();
    std::vector<Expr> alts;
    alts.push_back(sequence());
    while (peek() == '|') {
      advance();
      alts.push_back(sequence());
    }
    if (alts.size() == 1) return std::move(alts.front());
    Expr e;
    e.kind = Expr::Kind::Alt;
    e.children = std::move(alts);
    e.span = at;
    return e;
  }

  Expr sequence() {
    skip();
    auto at = here();
    std::vector<Expr> items;
    while (!done() && peek() != '|' && peek() != ';' && peek() != ')' && peek() != ',') {
      items.push_back(postfix());
      skip();
    }
    if (items.size() == 1) return std::move(items.front());
    Expr e;
    e.kind = Expr::Kind::Seq;
    e.children = std::move(items);
    e.span = at;
    return e;
  }

  Expr postfix() {
    auto e = primary();
    skip();
    while (peek() == '?' || peek() == '+' || peek() == '*') {
      auto at = here();
      char op = peek();
      advance();
      Expr wrapped;
      wrapped.span = at;
      if (op == '?') {
        wrapped.kind = Expr::Kind::Optional;
      } else {
        wrapped.kind = Expr::Kind::List;
        wrapped.at_least_one = op == '+';
      }
      wrapped.children.push_back(std::move(e));
      e = std::move(wrapped);
      skip();
    }
    return e;
  }

  Expr primary() {
    skip();
    auto at = here();
    if (done()) throw ParseError("unexpected end of input", at);
    char c = peek();
    if (c == '"') return terminal();
    if (c == '(') {
      advance();
      auto inner = alternation();
      expect(')');
      inner.span = at;
      return inner;
    }
    if (!ident_start(c)) throw ParseError(std::string("unexpected '") + c + "'", at);

    auto name = identifier("symbol");
    bool list_op = (peek() == '+' || peek() == '*') && pos_ + 1 < text_.size() && text_[pos_ + 1] == '(';
    if (list_op) {
      auto sep = binary_constraint_named(name);
      if (!sep) throw ParseError("unknown list annotation '" + name + peek() + "'", at);
      Expr e;
      e.kind = Expr::Kind::List;
      e.at_least_one = peek() == '+';
      e.separator = sep;
      e.span = at;
      advance();
      advance();
      e.children.push_back(alternation());
      expect(')');
      return e;
    }
    if (peek() == '(') {
      advance();
      Expr e;
      e.span = at;
      if (auto u = unary_constraint_from_name(name)) {
        e.kind = Expr::Kind::Unary;
        e.unary = *u;
        e.children.push_back(alternation());
      } else if (auto b = binary_constraint_named(name)) {
        e.kind = Expr::Kind::Binary;
        e.binary = *b;
        e.children.push_back(alternation());
        expect(',');
        e.children.push_back(alternation());
      } else {
        throw ParseError("unknown annotation '" + name + "'", at);
      }
      expect(')');
      return e;
    }
    Expr e;
    e.kind = Expr::Kind::Ref;
    e.text = name;
    e.span = at;
    return e;
  }

  static std::optional<BinaryConstraint> binary_constraint_named(std::string_view name) {
    if (name == "aligned") return BinaryConstraint::Align;
    if (name == "indented") return BinaryConstraint::Indent;
    return std::nullopt;
  }

  Expr terminal() {
    auto at = here();
    advance();
    std::string value;
    while (true) {
      if (done() || peek() == '\n') throw ParseError("unterminated terminal", at);
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (done()) throw ParseError("unterminated terminal", at);
        c = peek();
        advance();
      }
      value.push_back(c);
    }
    if (value.empty()) throw ParseError("empty terminal", at);
    if (std::any_of(value.begin(), value.end(), [](char ch) { return ch == ' ' || ch == '\t'; }))
      throw ParseError("terminal contains whitespace", at);
    Expr e;
    e.kind = Expr::Kind::Terminal;
    e.text = std::move(value);
    e.span = at;
    return e;
  }

  std::string identifier(const char* what) {
    skip();
    if (done() || !ident_start(peek())) throw ParseError(std::string("expected ") + what, here());
    auto start = pos_;
    while (!done() && ident_char(peek())) advance();
    return std::string(text_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip();
    if (done() || peek() != c) throw ParseError(std::string("expected '") + c + "'", here());
    advance();
    skip();
  }

  void skip() {
    while (!done()) {
      char c = peek();
      if (c == '#') {
        while (!done() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return done() ? '\0' : text_[pos_]; }
  SourceSpan here() const { return {line_, col_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else if ((static_cast<unsigned char>(text_[pos_]) & 0xC0) != 0x80) {
      ++col_;
    }
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool needs_group(const Expr& e) {
  return e.kind == Expr::Kind::Alt || (e.kind == Expr::Kind::Seq && !e.children.empty());
}

void print(std::ostream& out, const Expr& e) {
  auto grouped = [&](const Expr& c) {
    if (needs_group(c)) {
      out << '(';
      print(out, c);
      out << ')';
    } else {
      print(out, c);
    }
  };
  switch (e.kind) {
    case Expr::Kind::Alt:
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out << " | ";
        if (e.children[i].kind == Expr::Kind::Alt)
          grouped(e.children[i]);
        else
          print(out, e.children[i]);
      }
      break;
    case Expr::Kind::Seq:
      if (e.children.empty()) {
        out << "()";
        break;
      }
      for (std::size_t i = 0; i < e.children.size(); ++i) {
        if (i) out << ' ';
        grouped(e.children[i]);
      }
      break;
    case Expr::Kind::Terminal:
      out << '"';
      for (char c : e.text) {
        if (c == '"' || c == '\\') out << '\\';
        out << c;
      }
      out << '"';
      break;
    case Expr::Kind::Ref:
      out << e.text;
      break;
    case Expr::Kind::Optional:
      grouped(e.children[0]);
      out << '?';
      break;
    case Expr::Kind::List:
      if (e.separator) {
        out << (*e.separator == BinaryConstraint::Align ? "aligned" : "indented") << (e.at_least_one ? '+' : '*')
            << '(';
        print(out, e.children[0]);
        out << ')';
      } else {
        grouped(e.children[0]);
        out << (e.at_least_one ? '+' : '*');
      }
      break;
    case Expr::Kind::Unary:
      out << name(e.unary) << '(';
      print(out, e.children[0]);
      out << ')';
      break;
    case Expr::Kind::Binary:
      out << (e.binary == BinaryConstraint::Align ? "aligned" : "indented") << '(';
      print(out, e.children[0]);
      out << ", ";
      print(out, e.children[1]);
      out << ')';
      break;
  }
}

void number(Expr& e, int& next) {
  e.id = next++;
  for (auto& c : e.children) number(c, next);
}

}  // namespace

EbnfGrammar parse_ebnf(std::string_view text) { return Parser(text).parse(); }

std::string print_expr(const Expr& e) {
  std::ostringstream out;
  print(out, e);
  return out.str();
}

std::string print_ebnf(const EbnfGrammar& g) {
  std::ostringstream out;
  out << "start " << g.start << ";\n";
  for (const auto& r : g.rules) {
    out << r.name << ": ";
    print(out, r.body);
    out << ";\n";
  }
  return out.str();
}

void number_nodes(EbnfGrammar& g) {
  int next = 0;
  for (auto& r : g.rules) number(r.body, next);
}

}  // namespace layit
