#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "layit/smt.hpp"

namespace layit::smt {

namespace {

Formula make(Kind kind, Sort sort, std::vector<Formula> children = {}) {
  auto node = std::make_shared<Formula::Node>();
  node->kind = kind;
  node->sort = sort;
  node->children = std::move(children);
  return Formula(std::move(node));
}

void require(const Formula& f, Sort sort, const char* what) {
  if (f.sort() != sort) throw Error(std::string(what) + ": operand has the wrong sort");
}

bool is_int_const(const Formula& f) { return f.kind() == Kind::IntConst; }

}  // namespace

Kind Formula::kind() const { return node_->kind; }
Sort Formula::sort() const { return node_->sort; }
bool Formula::bool_value() const { return node_->bval; }
std::int64_t Formula::int_value() const { return node_->ival; }
const std::string& Formula::name() const { return node_->name; }
std::span<const Formula> Formula::children() const { return node_->children; }

Formula bool_const(bool b) {
  static const Formula t = [] {
    auto n = std::make_shared<Formula::Node>();
    n->kind = Kind::BoolConst;
    n->sort = Sort::Bool;
    n->bval = true;
    return Formula(n);
  }();
  static const Formula f = [] {
    auto n = std::make_shared<Formula::Node>();
    n->kind = Kind::BoolConst;
    n->sort = Sort::Bool;
    n->bval = false;
    return Formula(n);
  }();
  return b ? t : f;
}

Formula true_() { return bool_const(true); }
Formula false_() { return bool_const(false); }

Formula int_const(std::int64_t v) {
  auto n = std::make_shared<Formula::Node>();
  n->kind = Kind::IntConst;
  n->sort = Sort::Int;
  n->ival = v;
  return Formula(std::move(n));
}

Formula bool_var(std::string name) {
  auto n = std::make_shared<Formula::Node>();
  n->kind = Kind::Var;
  n->sort = Sort::Bool;
  n->name = std::move(name);
  return Formula(std::move(n));
}

Formula int_var(std::string name) {
  auto n = std::make_shared<Formula::Node>();
  n->kind = Kind::Var;
  n->sort = Sort::Int;
  n->name = std::move(name);
  return Formula(std::move(n));
}

Formula conjunction(std::vector<Formula> fs) {
  std::vector<Formula> kept;
  kept.reserve(fs.size());
  for (auto& f : fs) {
    require(f, Sort::Bool, "and");
    if (f.is_false()) return false_();
    if (f.is_true()) continue;
    if (f.kind() == Kind::And) {
      for (const auto& c : f.children()) kept.push_back(c);
    } else {
      kept.push_back(std::move(f));
    }
  }
  if (kept.empty()) return true_();
  if (kept.size() == 1) return kept.front();
  return make(Kind::And, Sort::Bool, std::move(kept));
}

Formula disjunction(std::vector<Formula> fs) {
  std::vector<Formula> kept;
  kept.reserve(fs.size());
  for (auto& f : fs) {
    require(f, Sort::Bool, "or");
    if (f.is_true()) return true_();
    if (f.is_false()) continue;
    if (f.kind() == Kind::Or) {
      for (const auto& c : f.children()) kept.push_back(c);
    } else {
      kept.push_back(std::move(f));
    }
  }
  if (kept.empty()) return false_();
  if (kept.size() == 1) return kept.front();
  return make(Kind::Or, Sort::Bool, std::move(kept));
}

Formula conjunction(std::initializer_list<Formula> fs) { return conjunction(std::vector<Formula>(fs)); }
Formula disjunction(std::initializer_list<Formula> fs) { return disjunction(std::vector<Formula>(fs)); }

Formula negation(const Formula& f) {
  require(f, Sort::Bool, "not");
  if (f.kind() == Kind::BoolConst) return bool_const(!f.bool_value());
  if (f.kind() == Kind::Not) return f.children()[0];
  return make(Kind::Not, Sort::Bool, {f});
}

Formula implies(const Formula& a, const Formula& b) {
  require(a, Sort::Bool, "=>");
  require(b, Sort::Bool, "=>");
  if (a.is_false() || b.is_true()) return true_();
  if (a.is_true()) return b;
  if (b.is_false()) return negation(a);
  return make(Kind::Implies, Sort::Bool, {a, b});
}

Formula iff(const Formula& a, const Formula& b) {
  require(a, Sort::Bool, "iff");
  require(b, Sort::Bool, "iff");
  if (a.is_true()) return b;
  if (b.is_true()) return a;
  if (a.is_false()) return negation(b);
  if (b.is_false()) return negation(a);
  return make(Kind::Iff, Sort::Bool, {a, b});
}

Formula ite(const Formula& c, const Formula& then, const Formula& otherwise) {
  if (c.is_true()) return then;
  if (c.is_false()) return otherwise;
  return disjunction({conjunction({c, then}), conjunction({negation(c), otherwise})});
}

Formula eq(const Formula& a, const Formula& b) {
  if (a.sort() != b.sort()) throw Error("=: operands differ in sort");
  if (a.sort() == Sort::Bool) return iff(a, b);
  if (is_int_const(a) && is_int_const(b)) return bool_const(a.int_value() == b.int_value());
  if (a.id() == b.id()) return true_();
  return make(Kind::Eq, Sort::Bool, {a, b});
}

Formula le(const Formula& a, const Formula& b) {
  require(a, Sort::Int, "<=");
  require(b, Sort::Int, "<=");
  if (is_int_const(a) && is_int_const(b)) return bool_const(a.int_value() <= b.int_value());
  if (a.id() == b.id()) return true_();
  return make(Kind::Le, Sort::Bool, {a, b});
}

Formula lt(const Formula& a, const Formula& b) {
  require(a, Sort::Int, "<");
  require(b, Sort::Int, "<");
  if (is_int_const(a) && is_int_const(b)) return bool_const(a.int_value() < b.int_value());
  if (a.id() == b.id()) return false_();
  return make(Kind::Lt, Sort::Bool, {a, b});
}

Formula ge(const Formula& a, const Formula& b) { return le(b, a); }
Formula gt(const Formula& a, const Formula& b) { return lt(b, a); }

Formula add(std::vector<Formula> terms) {
  std::vector<Formula> kept;
  std::int64_t constant = 0;
  for (auto& t : terms) {
    require(t, Sort::Int, "+");
    if (is_int_const(t)) {
      constant += t.int_value();
    } else if (t.kind() == Kind::Add) {
      for (const auto& c : t.children()) {
        if (is_int_const(c))
          constant += c.int_value();
        else
          kept.push_back(c);
      }
    } else {
      kept.push_back(std::move(t));
    }
  }
  if (constant != 0 || kept.empty()) kept.push_back(int_const(constant));
  if (kept.size() == 1) return kept.front();
  return make(Kind::Add, Sort::Int, std::move(kept));
}

Formula add(const Formula& a, std::int64_t offset) { return add(std::vector<Formula>{a, int_const(offset)}); }

std::size_t count_nodes(const Formula& f) {
  std::unordered_map<const Formula::Node*, std::size_t> memo;
  auto go = [&](auto&& self, const Formula& g) -> std::size_t {
    if (auto it = memo.find(g.id()); it != memo.end()) return it->second;
    std::size_t total = 1;
    for (const auto& c : g.children()) total += self(self, c);
    memo.emplace(g.id(), total);
    return total;
  };
  return go(go, f);
}

std::vector<Declaration> free_variables(const Formula& f) {
  std::vector<Declaration> out;
  std::unordered_set<const Formula::Node*> seen;
  std::unordered_set<std::string> names;
  auto go = [&](auto&& self, const Formula& g) -> void {
    if (!seen.insert(g.id()).second) return;
    if (g.kind() == Kind::Var) {
      if (names.insert(g.name()).second) out.push_back({g.name(), g.sort()});
      return;
    }
    for (const auto& c : g.children()) self(self, c);
  };
  go(go, f);
  return out;
}

namespace {

void print(std::ostream& out, const Formula& f) {
  auto nary = [&](const char* op) {
    out << '(' << op;
    for (const auto& c : f.children()) {
      out << ' ';
      print(out, c);
    }
    out << ')';
  };
  switch (f.kind()) {
    case Kind::BoolConst: out << (f.bool_value() ? "true" : "false"); break;
    case Kind::IntConst:
      if (f.int_value() < 0)
        out << "(- " << -f.int_value() << ')';
      else
        out << f.int_value();
      break;
    case Kind::Var: out << f.name(); break;
    case Kind::And: nary("and"); break;
    case Kind::Or: nary("or"); break;
    case Kind::Not: nary("not"); break;
    case Kind::Implies: nary("=>"); break;
    case Kind::Iff:
    case Kind::Eq: nary("="); break;
    case Kind::Le: nary("<="); break;
    case Kind::Lt: nary("<"); break;
    case Kind::Add: nary("+"); break;
  }
}

}  // namespace

std::string to_smtlib_term(const Formula& f) {
  std::ostringstream out;
  print(out, f);
  return out.str();
}

std::string to_smtlib(const Formula& f, std::span<const Declaration> decls) {
  std::ostringstream out;
  out << "(set-logic QF_LIA)\n";
  for (const auto& d : decls) out << "(declare-const " << d.name << (d.sort == Sort::Bool ? " Bool" : " Int") << ")\n";
  out << "(assert ";
  print(out, f);
  out << ")\n(check-sat)\n(get-model)\n";
  return out.str();
}

std::optional<Value> Model::get(std::string_view name) const {
  if (auto it = values_.find(name); it != values_.end()) return it->second;
  return std::nullopt;
}

bool Model::boolean(std::string_view name) const {
  auto v = get(name);
  if (!v || !std::holds_alternative<bool>(*v)) throw Error("model has no boolean '" + std::string(name) + "'");
  return std::get<bool>(*v);
}

std::int64_t Model::integer(std::string_view name) const {
  auto v = get(name);
  if (!v || !std::holds_alternative<std::int64_t>(*v))
    throw Error("model has no integer '" + std::string(name) + "'");
  return std::get<std::int64_t>(*v);
}

Value evaluate(const Formula& f, const Model& m) {
  auto b = [&](const Formula& g) { return std::get<bool>(evaluate(g, m)); };
  auto i = [&](const Formula& g) { return std::get<std::int64_t>(evaluate(g, m)); };
  auto kids = f.children();
  switch (f.kind()) {
    case Kind::BoolConst: return f.bool_value();
    case Kind::IntConst: return f.int_value();
    case Kind::Var: {
      auto v = m.get(f.name());
      if (!v) throw Error("unassigned variable '" + f.name() + "'");
      return *v;
    }
    case Kind::And:
      for (const auto& c : kids)
        if (!b(c)) return false;
      return true;
    case Kind::Or:
      for (const auto& c : kids)
        if (b(c)) return true;
      return false;
    case Kind::Not: return !b(kids[0]);
    case Kind::Implies: return !b(kids[0]) || b(kids[1]);
    case Kind::Iff: return b(kids[0]) == b(kids[1]);
    case Kind::Eq: return i(kids[0]) == i(kids[1]);
    case Kind::Le: return i(kids[0]) <= i(kids[1]);
    case Kind::Lt: return i(kids[0]) < i(kids[1]);
    case Kind::Add: {
      std::int64_t total = 0;
      for (const auto& c : kids) total += i(c);
      return total;
    }
  }
  throw Error("unknown formula kind");
}

bool holds(const Formula& f, const Model& m) {
  if (f.sort() != Sort::Bool) throw Error("holds: formula is not boolean");
  return std::get<bool>(evaluate(f, m));
}

}  // namespace layit::smt
