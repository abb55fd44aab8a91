#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "layit/smt.hpp"

namespace layit::smt {

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "layit-XXXXXX").string();
    if (!mkdtemp(pattern.data())) throw SolverError("cannot create a temporary directory");
    path = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Minimal s-expression reader for solver models.
struct Sexp {
  std::string atom;
  std::vector<Sexp> list;
  bool is_list = false;
};

class SexpReader {
public:
  explicit SexpReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip();
    return pos_ >= text_.size();
  }

  Sexp read() {
    skip();
    if (pos_ >= text_.size()) throw SolverError("unexpected end of solver output");
    Sexp out;
    if (text_[pos_] == '(') {
      ++pos_;
      out.is_list = true;
      while (true) {
        skip();
        if (pos_ >= text_.size()) throw SolverError("unbalanced solver output");
        if (text_[pos_] == ')') {
          ++pos_;
          break;
        }
        out.list.push_back(read());
      }
      return out;
    }
    if (text_[pos_] == ')') throw SolverError("unbalanced solver output");
    if (text_[pos_] == '|') {
      auto end = text_.find('|', pos_ + 1);
      if (end == std::string_view::npos) throw SolverError("unterminated quoted symbol");
      out.atom = std::string(text_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return out;
    }
    if (text_[pos_] == '"') {
      auto end = text_.find('"', pos_ + 1);
      if (end == std::string_view::npos) throw SolverError("unterminated string");
      out.atom = std::string(text_.substr(pos_, end - pos_ + 1));
      pos_ = end + 1;
      return out;
    }
    auto start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')')
      ++pos_;
    out.atom = std::string(text_.substr(start, pos_ - start));
    return out;
  }

private:
  void skip() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::optional<Value> read_value(const Sexp& e) {
  if (!e.is_list) {
    if (e.atom == "true") return Value(true);
    if (e.atom == "false") return Value(false);
    try {
      std::size_t used = 0;
      auto v = std::stoll(e.atom, &used);
      if (used == e.atom.size()) return Value(static_cast<std::int64_t>(v));
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }
  if (e.list.size() == 2 && !e.list[0].is_list && e.list[0].atom == "-") {
    auto inner = read_value(e.list[1]);
    if (inner && std::holds_alternative<std::int64_t>(*inner)) return Value(-std::get<std::int64_t>(*inner));
  }
  return std::nullopt;
}

void collect_definitions(const Sexp& e, Model& model) {
  if (!e.is_list) return;
  if (e.list.size() == 5 && !e.list[0].is_list && e.list[0].atom == "define-fun" && e.list[2].is_list &&
      e.list[2].list.empty()) {
    if (auto v = read_value(e.list[4])) model.set(e.list[1].atom, *v);
    return;
  }
  for (const auto& c : e.list) collect_definitions(c, model);
}

}  // namespace

SolverConfig SolverConfig::from_environment() {
  SolverConfig config;
  const char* env = std::getenv("LAYIT_SMT_SOLVER");
  config.binary = env && *env ? env : "z3";
  return config;
}

SolveResult parse_solver_output(std::string_view out, std::span<const Declaration> decls) {
  SolveResult result;
  SexpReader reader(out);
  if (reader.at_end()) throw SolverError("solver produced no output");
  auto first = reader.read();
  if (first.is_list) throw SolverError("unexpected solver output: " + std::string(out.substr(0, 200)));
  if (first.atom == "unsat") {
    result.answer = Answer::Unsat;
    return result;
  }
  if (first.atom == "unknown" || first.atom == "timeout") {
    result.answer = Answer::Unknown;
    return result;
  }
  if (first.atom != "sat") throw SolverError("unexpected solver output: " + std::string(out.substr(0, 200)));
  result.answer = Answer::Sat;
  while (!reader.at_end()) collect_definitions(reader.read(), result.model);
  for (const auto& d : decls) {
    if (!result.model.get(d.name)) {
      if (d.sort == Sort::Bool)
        result.model.set(d.name, false);
      else
        result.model.set(d.name, std::int64_t{0});
    }
  }
  return result;
}

SolveResult solve(const std::string& script, std::span<const Declaration> decls, const SolverConfig& config,
                  std::stop_token stop) {
  if (config.binary.empty()) throw SolverError("no solver configured");
  TempDir dir;
  auto input = dir.path / "query.smt2";
  auto output = dir.path / "out.txt";
  auto errors = dir.path / "err.txt";
  {
    std::ofstream f(input);
    f << script;
    if (!f) throw SolverError("cannot write the solver query");
  }

  auto started = std::chrono::steady_clock::now();
  pid_t pid = fork();
  if (pid < 0) throw SolverError("fork failed");
  if (pid == 0) {
    int out_fd = open(output.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    int err_fd = open(errors.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0600);
    if (out_fd < 0 || err_fd < 0) _exit(126);
    dup2(out_fd, STDOUT_FILENO);
    dup2(err_fd, STDERR_FILENO);
    setpgid(0, 0);
    std::string path = input.string();
    char* argv[] = {const_cast<char*>(config.binary.c_str()), path.data(), nullptr};
    execvp(argv[0], argv);
    _exit(127);
  }

  int status = 0;
  bool timed_out = false;
  while (true) {
    pid_t r = waitpid(pid, &status, WNOHANG);
    if (r == pid) break;
    if (r < 0) throw SolverError("waitpid failed");
    auto now = std::chrono::steady_clock::now();
    bool cancel = stop.stop_requested();
    bool expire = config.timeout.count() > 0 && now - started >= config.timeout;
    if (cancel || expire) {
      kill(-pid, SIGKILL);
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      if (cancel) throw Cancelled();
      timed_out = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

  if (timed_out) {
    SolveResult r;
    r.answer = Answer::Unknown;
    r.elapsed = elapsed;
    return r;
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) == 127)
    throw SolverError("could not run solver '" + config.binary + "'", slurp(errors));

  auto text = slurp(output);
  SolveResult result;
  try {
    result = parse_solver_output(text, decls);
  } catch (const SolverError& e) {
    throw SolverError(e.what(), slurp(errors));
  }
  result.elapsed = elapsed;
  return result;
}

}  // namespace layit::smt
