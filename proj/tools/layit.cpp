#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "layit/api.hpp"
#include "layit/workbench.hpp"

using namespace layit;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw WorkbenchError("io_error", "cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void report(const WorkbenchError& e) {
  std::cerr << "error[" << e.code() << "]: " << e.what() << '\n';
  if (!e.details().empty()) std::cerr << e.details().dump(2) << '\n';
}

smt::SolverConfig solver_config(const std::string& binary, int timeout) {
  auto config = smt::SolverConfig::from_environment();
  if (!binary.empty()) config.binary = binary;
  config.timeout = std::chrono::seconds(timeout);
  return config;
}

void print_witness(std::ostream& out, const AmbiguityWitness& w, const Grammar& g, WidthMode widths) {
  const auto& symbols = g.symbols();
  out << "ambiguous sentence of length " << w.k << " for " << symbols.name(w.start) << ":\n";
  auto text = render(w.sentence, widths, symbols);
  out << (text.empty() ? "(empty)" : text) << "\n\n";
  for (std::size_t i = 0; i < w.trees.size(); ++i) out << "tree " << i << ":\n" << tree_to_text(*w.trees[i], symbols);
  if (w.more_trees) out << "(more trees exist)\n";
}

int run_check(const std::string& file, std::size_t bound, const std::string& start, const std::string& dump,
              bool unit, const std::string& solver, int timeout) {
  auto g = CompiledGrammar::compile(read_file(file));
  CheckOptions options;
  options.bound = bound;
  options.widths = unit ? WidthMode::Unit : WidthMode::True;
  options.solver = solver_config(solver, timeout);
  options.dump_dir = dump;
  if (!start.empty()) {
    auto nt = g->ls2nf.symbols().find_nonterminal(start);
    if (!nt) throw WorkbenchError("unknown_start", "unknown start symbol '" + start + "'");
    options.start = *nt;
  }
  auto progress = [](const ProgressEvent& e) {
    if (e.status == ProgressEvent::Status::Encoding || e.status == ProgressEvent::Status::Solving) return;
    std::cerr << "k=" << e.k << " nodes=" << e.formula_nodes << " encode=" << e.encode_time.count()
              << "ms solve=" << e.solve_time.count() << "ms";
    switch (e.status) {
      case ProgressEvent::Status::Sat:
        std::cerr << " sat\n";
        break;
      case ProgressEvent::Status::Unsat:
        std::cerr << " unsat\n";
        break;
      case ProgressEvent::Status::Unknown:
        std::cerr << " unknown\n";
        break;
      default:
        std::cerr << '\n';
    }
  };
  auto result = find_shortest_ambiguous(g->ls2nf, options, progress);
  if (result.aborted) {
    std::cerr << "stopped: " << result.abort_reason << " (completed up to k=" << result.last_completed_k << ")\n";
    return 3;
  }
  if (result.witness) {
    print_witness(std::cout, *result.witness, g->ls2nf, options.widths);
    return 2;
  }
  std::cout << "no ambiguous sentence up to length " << bound << '\n';
  return 0;
}

const char* kReplHelp =
    "commands:\n"
    "  check [bound] [start]   search for the shortest ambiguous sentence\n"
    "  show                    print the current witness and its trees\n"
    "  format <tree>           enter a formatted sentence for a tree, end with a line '.'\n"
    "  submit                  synthesize candidates from the entered sentences\n"
    "  accept <id>...          apply candidates and print the refined grammar\n"
    "  grammar                 print the current grammar\n"
    "  history                 list rounds\n"
    "  quit\n";

int run_repl(const std::string& file, std::size_t bound, const std::string& solver, int timeout, bool unit) {
  Workbench wb({{}, solver_config(solver, timeout)});
  SessionOptions opts;
  opts.bound = bound;
  opts.widths = unit ? WidthMode::Unit : WidthMode::True;
  opts.timeout = std::chrono::seconds(timeout);
  auto id = wb.create_session(read_file(file), opts).id;
  std::vector<std::pair<std::size_t, std::string>> pending;
  std::cout << kReplHelp;

  std::string line;
  while (std::cout << "layit> " << std::flush, std::getline(std::cin, line)) {
    std::istringstream in(line);
    std::string cmd;
    in >> cmd;
    if (cmd.empty()) continue;
    try {
      if (cmd == "quit" || cmd == "exit") break;
      if (cmd == "help") {
        std::cout << kReplHelp;
      } else if (cmd == "check") {
        std::optional<std::size_t> b;
        std::optional<std::string> start;
        std::size_t n;
        std::string s;
        if (in >> n) b = n;
        if (in >> s) start = s;
        auto job = wb.wait(wb.start_check(id, b, start).id);
        pending.clear();
        if (job.state != JobState::Done) {
          std::cout << "check " << name(job.state) << ": " << job.error << '\n';
        } else if (!job.witness_k) {
          std::cout << "no ambiguous sentence up to length " << job.bound << '\n';
        } else {
          auto snap = wb.session(id);
          print_witness(std::cout, *snap.rounds.back().witness, snap.rounds.back().input->ls2nf, opts.widths);
        }
      } else if (cmd == "show") {
        auto snap = wb.session(id);
        if (snap.rounds.empty() || !snap.rounds.back().witness)
          std::cout << "no witness\n";
        else
          print_witness(std::cout, *snap.rounds.back().witness, snap.rounds.back().input->ls2nf, opts.widths);
      } else if (cmd == "format") {
        std::size_t tree = 0;
        if (!(in >> tree)) {
          std::cout << "usage: format <tree>\n";
          continue;
        }
        std::string text, l;
        while (std::getline(std::cin, l) && l != ".") text += l + "\n";
        pending.emplace_back(tree, text);
      } else if (cmd == "submit") {
        auto result = wb.submit_feedback_text(id, pending);
        pending.clear();
        if (std::holds_alternative<Inconsistent>(result)) {
          std::cout << "inconsistent: no layout constraint matches the feedback\n";
        } else {
          for (const auto& c : candidates_json(wb.session(id).rounds.back()))
            std::cout << "  " << c["id"].get<std::string>() << (c["exercised"].get<bool>() ? "  " : " ~")
                      << (c["liftable"].get<bool>() ? "  " : " !") << c["rule"].get<std::string>() << '\n';
          std::cout << "(~ rule not used by the feedback, ! no grammar syntax for it)\n";
        }
      } else if (cmd == "accept") {
        std::vector<std::string> ids;
        for (std::string s; in >> s;) ids.push_back(s);
        std::cout << wb.accept_candidates(id, ids);
      } else if (cmd == "grammar") {
        std::cout << wb.session(id).grammar->text;
      } else if (cmd == "history") {
        auto snap = wb.session(id);
        for (std::size_t i = 0; i < snap.rounds.size(); ++i) {
          const auto& r = snap.rounds[i];
          std::cout << "round " << i << ": ";
          if (r.witness)
            std::cout << "ambiguous at k=" << r.witness->k;
          else
            std::cout << "none found up to " << r.bound;
          if (r.closed()) {
            std::cout << ", accepted";
            for (const auto& a : r.accepted) std::cout << ' ' << a;
          }
          std::cout << '\n';
        }
      } else {
        std::cout << "unknown command; try help\n";
      }
    } catch (const WorkbenchError& e) {
      report(e);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layit: layout-sensitive grammar workbench"};
  app.require_subcommand(1);

  std::string file, start, dump, solver, data = "layit-data", host = "127.0.0.1";
  std::size_t bound = 10;
  bool unit = false;
  int timeout = 0;
  int port = 8080;

  auto* check = app.add_subcommand("check", "find the shortest ambiguous sentence");
  check->add_option("file", file, "grammar file")->required()->check(CLI::ExistingFile);
  check->add_option("--bound", bound, "maximum sentence length")->required()->check(CLI::PositiveNumber);
  check->add_option("--start", start, "start symbol");
  check->add_option("--dump-smt", dump, "write k<N>.smt2 scripts here");
  check->add_flag("--unit-width", unit, "treat every token as one column wide");
  check->add_option("--solver", solver, "SMT solver binary");
  check->add_option("--timeout-secs", timeout, "per-length solver timeout");

  auto* repl = app.add_subcommand("repl", "interactive refinement loop");
  repl->add_option("file", file, "grammar file")->required()->check(CLI::ExistingFile);
  repl->add_option("--bound", bound, "default bound")->check(CLI::PositiveNumber);
  repl->add_flag("--unit-width", unit, "treat every token as one column wide");
  repl->add_option("--solver", solver, "SMT solver binary");
  repl->add_option("--timeout-secs", timeout, "per-length solver timeout");

  auto* srv = app.add_subcommand("serve", "HTTP JSON API");
  srv->add_option("--port", port, "port")->check(CLI::Range(1, 65535));
  srv->add_option("--data", data, "session directory");
  srv->add_option("--host", host, "address to bind");
  srv->add_option("--solver", solver, "SMT solver binary");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*check) return run_check(file, bound, start, dump, unit, solver, timeout);
    if (*repl) return run_repl(file, bound, solver, timeout, unit);
    Workbench wb({data, solver_config(solver, 0)});
    return serve(wb, host, port) ? 0 : 1;
  } catch (const WorkbenchError& e) {
    report(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
  }
  return 1;
}
