#include "layit/grammar.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <sstream>
#include <tuple>

namespace layit {

namespace {

std::string_view surface_name(BinaryConstraint c) {
  return c == BinaryConstraint::Align ? "aligned" : "indented";
}

}  // namespace

Terminal SymbolTable::add_terminal(std::string name) {
  if (auto it = terminal_index_.find(name); it != terminal_index_.end()) return Terminal{it->second};
  auto id = static_cast<std::uint32_t>(terminals_.size());
  terminal_index_.emplace(name, id);
  terminals_.push_back(std::move(name));
  return Terminal{id};
}

Nonterminal SymbolTable::add_nonterminal(std::string name) {
  if (auto it = nonterminal_index_.find(name); it != nonterminal_index_.end()) return Nonterminal{it->second};
  auto id = static_cast<std::uint32_t>(nonterminals_.size());
  nonterminal_index_.emplace(name, id);
  nonterminals_.push_back(std::move(name));
  return Nonterminal{id};
}

std::optional<Terminal> SymbolTable::find_terminal(std::string_view name) const {
  if (auto it = terminal_index_.find(std::string(name)); it != terminal_index_.end()) return Terminal{it->second};
  return std::nullopt;
}

std::optional<Nonterminal> SymbolTable::find_nonterminal(std::string_view name) const {
  if (auto it = nonterminal_index_.find(std::string(name)); it != nonterminal_index_.end())
    return Nonterminal{it->second};
  return std::nullopt;
}

std::size_t SymbolTable::width(Terminal t) const {
  const auto& s = name(t);
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

bool has_constraint(const Clause& c) {
  if (auto* u = std::get_if<UnaryClause>(&c)) return u->constraint.has_value();
  if (auto* b = std::get_if<BinaryClause>(&c)) return b->constraint.has_value();
  return false;
}

std::string to_string(const Clause& c, const SymbolTable& symbols) {
  std::ostringstream out;
  std::visit(
      [&](const auto& cl) {
        using T = std::decay_t<decltype(cl)>;
        if constexpr (std::is_same_v<T, EmptyClause>) {
          out << "ε";
        } else if constexpr (std::is_same_v<T, AtomClause>) {
          out << '"' << symbols.name(cl.term) << '"';
        } else if constexpr (std::is_same_v<T, UnaryClause>) {
          if (cl.constraint)
            out << name(*cl.constraint) << '(' << symbols.name(cl.child) << ')';
          else
            out << symbols.name(cl.child);
        } else {
          if (cl.constraint)
            out << surface_name(*cl.constraint) << '(' << symbols.name(cl.left) << ", "
                << symbols.name(cl.right) << ')';
          else
            out << symbols.name(cl.left) << ' ' << symbols.name(cl.right);
        }
      },
      c);
  return out.str();
}

std::string to_string(const Production& p, const SymbolTable& symbols) {
  return symbols.name(p.lhs) + " -> " + to_string(p.rhs, symbols);
}

// --- nullable ---------------------------------------------------------------

std::vector<bool> compute_nullable(const SymbolTable& symbols, std::span<const Production> productions) {
  const auto n = symbols.nonterminal_count();
  std::vector<bool> nullable(n, false);
  // Productions waiting on a nonterminal, and how many of their children are
  // still unknown to be nullable.
  std::vector<std::vector<std::size_t>> waiting(n);
  std::vector<int> pending(productions.size(), -1);
  std::deque<Nonterminal> queue;

  auto mark = [&](Nonterminal a) {
    if (!nullable[index(a)]) {
      nullable[index(a)] = true;
      queue.push_back(a);
    }
  };

  for (std::size_t i = 0; i < productions.size(); ++i) {
    const auto& p = productions[i];
    if (std::holds_alternative<EmptyClause>(p.rhs)) {
      mark(p.lhs);
    } else if (auto* u = std::get_if<UnaryClause>(&p.rhs)) {
      pending[i] = 1;
      waiting[index(u->child)].push_back(i);
    } else if (auto* b = std::get_if<BinaryClause>(&p.rhs)) {
      pending[i] = b->left == b->right ? 1 : 2;
      waiting[index(b->left)].push_back(i);
      if (b->right != b->left) waiting[index(b->right)].push_back(i);
    }
  }

  while (!queue.empty()) {
    auto a = queue.front();
    queue.pop_front();
    for (auto i : waiting[index(a)]) {
      if (--pending[i] == 0) mark(productions[i].lhs);
    }
  }
  return nullable;
}

// --- Grammar ----------------------------------------------------------------

Grammar::Grammar(SymbolTable symbols, std::vector<Production> productions) : symbols_(std::move(symbols)) {
  const auto n = symbols_.nonterminal_count();
  by_lhs_.assign(n, {});
  for (auto& p : productions) {
    if (index(p.lhs) >= n) throw Error("production lhs out of range");
    bool duplicate = std::any_of(by_lhs_[index(p.lhs)].begin(), by_lhs_[index(p.lhs)].end(),
                                 [&](std::size_t j) { return productions_[j].rhs == p.rhs; });
    if (duplicate) continue;
    by_lhs_[index(p.lhs)].push_back(productions_.size());
    productions_.push_back(std::move(p));
  }
  nullable_ = compute_nullable(symbols_, productions_);
  auto result = check_acyclic(build_graph(*this));
  if (auto* order = std::get_if<std::vector<Nonterminal>>(&result)) topo_order_ = std::move(*order);
}

std::optional<std::size_t> Grammar::find_unary(Nonterminal lhs, Nonterminal child) const {
  for (auto i : productions_of(lhs))
    if (auto* u = std::get_if<UnaryClause>(&productions_[i].rhs); u && u->child == child) return i;
  return std::nullopt;
}

std::optional<std::size_t> Grammar::find_binary(Nonterminal lhs, Nonterminal left, Nonterminal right) const {
  for (auto i : productions_of(lhs))
    if (auto* b = std::get_if<BinaryClause>(&productions_[i].rhs); b && b->left == left && b->right == right)
      return i;
  return std::nullopt;
}

bool Grammar::has_atom(Nonterminal lhs, Terminal t) const {
  for (auto i : productions_of(lhs))
    if (auto* a = std::get_if<AtomClause>(&productions_[i].rhs); a && a->term == t) return true;
  return false;
}

bool Grammar::has_empty(Nonterminal lhs) const {
  for (auto i : productions_of(lhs))
    if (std::holds_alternative<EmptyClause>(productions_[i].rhs)) return true;
  return false;
}

Grammar Grammar::with_start(Nonterminal start) const {
  if (index(start) >= symbols_.nonterminal_count()) throw Error("start symbol out of range");
  auto symbols = symbols_;
  symbols.set_start(start);
  return Grammar(std::move(symbols), productions_);
}

// --- graph ------------------------------------------------------------------

bool GrammarGraph::has_edge(Nonterminal from, Nonterminal to) const {
  const auto& s = successors.at(index(from));
  return std::find(s.begin(), s.end(), to) != s.end();
}

std::size_t GrammarGraph::edge_count() const {
  std::size_t total = 0;
  for (const auto& s : successors) total += s.size();
  return total;
}

GrammarGraph build_graph(const Grammar& g) {
  GrammarGraph graph;
  graph.node_count = g.symbols().nonterminal_count();
  graph.successors.assign(graph.node_count, {});
  auto add = [&](Nonterminal from, Nonterminal to) {
    auto& s = graph.successors[index(from)];
    if (std::find(s.begin(), s.end(), to) == s.end()) s.push_back(to);
  };
  for (const auto& p : g.productions()) {
    if (auto* u = std::get_if<UnaryClause>(&p.rhs)) {
      add(p.lhs, u->child);
    } else if (auto* b = std::get_if<BinaryClause>(&p.rhs)) {
      if (g.nullable(b->right)) add(p.lhs, b->left);
      if (g.nullable(b->left)) add(p.lhs, b->right);
    }
  }
  return graph;
}

namespace {

struct Tarjan {
  const GrammarGraph& graph;
  std::vector<int> number, low, on_stack_at;
  std::vector<std::size_t> stack;
  int counter = 0;
  std::vector<std::vector<std::size_t>> sccs;

  explicit Tarjan(const GrammarGraph& g)
      : graph(g), number(g.node_count, -1), low(g.node_count, -1), on_stack_at(g.node_count, -1) {}

  void visit(std::size_t v) {
    number[v] = low[v] = counter++;
    on_stack_at[v] = static_cast<int>(stack.size());
    stack.push_back(v);
    for (auto succ : graph.successors[v]) {
      auto w = index(succ);
      if (number[w] == -1) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack_at[w] != -1) {
        low[v] = std::min(low[v], number[w]);
      }
    }
    if (low[v] == number[v]) {
      auto from = static_cast<std::size_t>(on_stack_at[v]);
      std::vector<std::size_t> scc(stack.begin() + static_cast<std::ptrdiff_t>(from), stack.end());
      for (auto w : scc) on_stack_at[w] = -1;
      stack.resize(from);
      sccs.push_back(std::move(scc));
    }
  }

  // Components come out sinks first.
  void run() {
    for (std::size_t v = 0; v < graph.node_count; ++v)
      if (number[v] == -1) visit(v);
  }
};

}  // namespace

AcyclicResult check_acyclic(const GrammarGraph& graph) {
  Tarjan tarjan(graph);
  tarjan.run();
  CycleReport report;
  for (const auto& scc : tarjan.sccs) {
    bool cyclic = scc.size() > 1 || graph.has_edge(Nonterminal(scc[0]), Nonterminal(scc[0]));
    if (!cyclic) continue;
    CycleReport::Component comp;
    for (auto v : scc) comp.members.push_back(Nonterminal(v));
    std::sort(comp.members.begin(), comp.members.end());
    report.components.push_back(std::move(comp));
  }
  if (!report.components.empty()) return report;

  std::vector<Nonterminal> order;
  order.reserve(graph.node_count);
  for (auto it = tarjan.sccs.rbegin(); it != tarjan.sccs.rend(); ++it) order.push_back(Nonterminal(it->front()));
  return order;
}

CycleReport cycle_report(const Grammar& g) {
  auto result = check_acyclic(build_graph(g));
  auto* report = std::get_if<CycleReport>(&result);
  if (!report) return {};
  for (auto& comp : report->components) {
    auto inside = [&](Nonterminal a) {
      return std::find(comp.members.begin(), comp.members.end(), a) != comp.members.end();
    };
    for (std::size_t i = 0; i < g.productions().size(); ++i) {
      const auto& p = g.production(i);
      if (!inside(p.lhs)) continue;
      bool edge = false;
      if (auto* u = std::get_if<UnaryClause>(&p.rhs)) {
        edge = inside(u->child);
      } else if (auto* b = std::get_if<BinaryClause>(&p.rhs)) {
        edge = (inside(b->left) && g.nullable(b->right)) || (inside(b->right) && g.nullable(b->left));
      }
      if (edge) comp.productions.push_back(i);
    }
  }
  return *report;
}

std::string describe(const CycleReport& report, const Grammar& g) {
  std::ostringstream out;
  for (const auto& comp : report.components) {
    out << "cycle through";
    for (auto a : comp.members) out << ' ' << g.symbols().name(a);
    out << ":\n";
    for (auto i : comp.productions) out << "  " << to_string(g.production(i), g.symbols()) << '\n';
  }
  return out.str();
}

// --- validation -------------------------------------------------------------

std::vector<Diagnostic> validate(const Grammar& g) {
  std::vector<Diagnostic> out;
  const auto& sym = g.symbols();
  const auto nt_count = sym.nonterminal_count();
  const auto t_count = sym.terminal_count();

  if (nt_count == 0) {
    out.push_back({"grammar has no nonterminals", {}});
    return out;
  }
  if (index(sym.start()) >= nt_count) out.push_back({"start symbol is not a nonterminal", {}});
  for (std::size_t i = 0; i < t_count; ++i) {
    const auto& name = sym.name(Terminal(i));
    if (name.empty()) out.push_back({"empty terminal name", {}});
    if (sym.find_nonterminal(name)) out.push_back({"'" + name + "' is both a terminal and a nonterminal", {}});
  }
  for (std::size_t i = 0; i < nt_count; ++i)
    if (sym.name(Nonterminal(i)).empty()) out.push_back({"empty nonterminal name", {}});

  std::map<std::tuple<std::size_t, std::size_t, std::size_t, int>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < g.productions().size(); ++i) {
    const auto& p = g.production(i);
    auto nt_ok = [&](Nonterminal a) { return index(a) < nt_count; };
    bool ok = std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          if constexpr (std::is_same_v<T, AtomClause>) return index(c.term) < t_count;
          else if constexpr (std::is_same_v<T, UnaryClause>) return nt_ok(c.child);
          else if constexpr (std::is_same_v<T, BinaryClause>) return nt_ok(c.left) && nt_ok(c.right);
          else return true;
        },
        p.rhs);
    if (!ok) {
      out.push_back({"production refers to an unknown symbol", {i}});
      continue;
    }
    if (auto* u = std::get_if<UnaryClause>(&p.rhs))
      groups[{index(p.lhs), index(u->child), 0, 1}].push_back(i);
    else if (auto* b = std::get_if<BinaryClause>(&p.rhs))
      groups[{index(p.lhs), index(b->left), index(b->right), 2}].push_back(i);
  }
  for (const auto& [key, members] : groups) {
    if (members.size() < 2) continue;
    const auto& p = g.production(members.front());
    std::string what = std::get<3>(key) == 1 ? "unary" : "binary";
    out.push_back({"conflicting " + what + " constraints for " + sym.name(p.lhs) + " -> " +
                       (std::get<3>(key) == 1 ? sym.name(Nonterminal(std::get<1>(key)))
                                              : sym.name(Nonterminal(std::get<1>(key))) + " " +
                                                    sym.name(Nonterminal(std::get<2>(key)))),
                   members});
  }
  return out;
}

// --- builder ----------------------------------------------------------------

Terminal GrammarBuilder::terminal(std::string_view name) { return symbols_.add_terminal(std::string(name)); }

Nonterminal GrammarBuilder::nonterminal(std::string_view name) {
  return symbols_.add_nonterminal(std::string(name));
}

GrammarBuilder& GrammarBuilder::empty(std::string_view lhs) {
  productions_.push_back({nonterminal(lhs), EmptyClause{}, {}});
  return *this;
}

GrammarBuilder& GrammarBuilder::atom(std::string_view lhs, std::string_view term) {
  auto a = nonterminal(lhs);
  productions_.push_back({a, AtomClause{terminal(term)}, {}});
  return *this;
}

GrammarBuilder& GrammarBuilder::unary(std::string_view lhs, std::string_view child,
                                      std::optional<UnaryConstraint> c) {
  auto a = nonterminal(lhs);
  productions_.push_back({a, UnaryClause{nonterminal(child), c}, {}});
  return *this;
}

GrammarBuilder& GrammarBuilder::binary(std::string_view lhs, std::string_view left, std::string_view right,
                                       std::optional<BinaryConstraint> c) {
  auto a = nonterminal(lhs);
  auto l = nonterminal(left);
  productions_.push_back({a, BinaryClause{l, nonterminal(right), c}, {}});
  return *this;
}

GrammarBuilder& GrammarBuilder::start(std::string_view name) {
  symbols_.set_start(nonterminal(name));
  start_set_ = true;
  return *this;
}

Grammar GrammarBuilder::build() const {
  auto symbols = symbols_;
  if (!start_set_ && symbols.nonterminal_count() > 0) symbols.set_start(Nonterminal(0));
  return Grammar(std::move(symbols), productions_);
}

}  // namespace layit
