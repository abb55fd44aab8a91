#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "layit/ebnf.hpp"
#include "layit/encoder.hpp"
#include "layit/json.hpp"
#include "layit/synthesis.hpp"

namespace layit {

// Failure reported to clients as {code, message, details}.
class WorkbenchError : public Error {
public:
  WorkbenchError(std::string code, const std::string& message, Json details = Json::object())
      : Error(message), code_(std::move(code)), details_(std::move(details)) {}
  const std::string& code() const { return code_; }
  const Json& details() const { return details_; }
  Json to_json() const;

private:
  std::string code_;
  Json details_;
};

// A grammar text together with its parsed and desugared forms.
struct CompiledGrammar {
  std::string text;
  EbnfGrammar surface;
  Grammar ls2nf;

  // Throws WorkbenchError: parse_error, invalid_grammar, cyclic_grammar.
  static std::shared_ptr<const CompiledGrammar> compile(std::string_view text);
};
using CompiledPtr = std::shared_ptr<const CompiledGrammar>;

struct SessionOptions {
  std::size_t bound = 10;
  std::string start;  // empty: the grammar's own start symbol
  WidthMode widths = WidthMode::True;
  bool resume_from_last_k = false;
  std::chrono::seconds timeout{0};
};

struct Round {
  CompiledPtr input;
  std::string start;
  std::size_t bound = 0;
  std::optional<AmbiguityWitness> witness;  // none found up to `bound` when empty
  std::vector<FeedbackItem> feedback;
  std::optional<CandidateSet> candidates;
  bool inconsistent = false;
  std::vector<std::string> accepted;
  CompiledPtr result;

  bool closed() const { return result != nullptr; }
};

struct SessionSnapshot {
  std::string id;
  std::string source_text;
  CompiledPtr grammar;
  SessionOptions options;
  std::vector<Round> rounds;
  std::string active_job;
};

enum class JobState { Queued, Running, Done, Failed, Cancelled };
std::string_view name(JobState s);

struct JobStatus {
  std::string id;
  std::string session;
  JobState state = JobState::Queued;
  std::size_t from_k = 1;
  std::size_t bound = 0;
  std::string start;
  std::size_t current_k = 0;
  std::size_t formula_nodes = 0;
  std::size_t last_completed_k = 0;
  std::optional<std::size_t> witness_k;  // set when done with a witness
  std::string error;

  bool finished() const { return state == JobState::Done || state == JobState::Failed || state == JobState::Cancelled; }
};

class Workbench {
public:
  struct Config {
    std::filesystem::path data_dir;  // empty: sessions live in memory only
    smt::SolverConfig solver = smt::SolverConfig::from_environment();
  };

  explicit Workbench(Config config);
  ~Workbench();
  Workbench(const Workbench&) = delete;
  Workbench& operator=(const Workbench&) = delete;

  SessionSnapshot create_session(std::string_view grammar_text, SessionOptions options = {});
  SessionSnapshot session(const std::string& id) const;
  std::vector<std::string> session_ids() const;

  JobStatus start_check(const std::string& session, std::optional<std::size_t> bound = std::nullopt,
                        std::optional<std::string> start = std::nullopt);
  JobStatus job(const std::string& id) const;
  JobStatus wait(const std::string& id) const;
  JobStatus cancel(const std::string& id);

  SynthesisResult submit_feedback(const std::string& session, std::vector<FeedbackItem> items);
  // Items as (tree index, formatted text).
  SynthesisResult submit_feedback_text(const std::string& session,
                                       std::span<const std::pair<std::size_t, std::string>> items);
  // Returns the new grammar text.
  std::string accept_candidates(const std::string& session, std::span<const std::string> ids);

  Json session_json(const std::string& id) const;
  Json job_json(const std::string& id) const;

private:
  struct Session;
  struct Job;

  std::shared_ptr<Session> find_session(const std::string& id) const;
  std::shared_ptr<Job> find_job(const std::string& id) const;
  bool busy(const Session& s) const;
  void persist(const Session& s) const;
  void load_all();
  void run_job(std::shared_ptr<Session> s, std::shared_ptr<Job> job, CompiledPtr grammar, CheckOptions options,
               std::stop_token stop);

  Config config_;
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::size_t next_session_ = 1;
  std::size_t next_job_ = 1;
};

Json session_to_json(const SessionSnapshot& s);
// Restores a persisted session; grammars are recompiled from their texts.
SessionSnapshot session_from_json(const Json& j);
inline constexpr int kSessionSchema = 1;

Json round_to_json(const Round& r, std::size_t index, WidthMode widths);
Json candidates_json(const Round& r);

// Indented one-node-per-line rendering for terminals.
std::string tree_to_text(const ParseTree& t, const SymbolTable& symbols);

}  // namespace layit
