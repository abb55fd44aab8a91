#include "layit/workbench.hpp"

#include <algorithm>
#include <condition_variable>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace layit {

namespace fs = std::filesystem;

Json WorkbenchError::to_json() const { return Json{{"code", code_}, {"message", what()}, {"details", details_}}; }

std::string_view name(JobState s) {
  switch (s) {
    case JobState::Queued:
      return "queued";
    case JobState::Running:
      return "running";
    case JobState::Done:
      return "done";
    case JobState::Failed:
      return "failed";
    case JobState::Cancelled:
      return "cancelled";
  }
  return "?";
}

namespace {

Json production_list(const Grammar& g, std::span<const std::size_t> ids) {
  auto out = Json::array();
  for (auto i : ids) out.push_back(to_string(g.production(i), g.symbols()));
  return out;
}

}  // namespace

CompiledPtr CompiledGrammar::compile(std::string_view text) {
  EbnfGrammar surface;
  try {
    surface = parse_ebnf(text);
  } catch (const ParseError& e) {
    throw WorkbenchError("parse_error", e.what(),
                         {{"line", e.at().line}, {"col", e.at().col}, {"message", e.message()}});
  }
  Grammar g = desugar(surface);
  if (auto diags = validate(g); !diags.empty()) {
    auto list = Json::array();
    for (const auto& d : diags) list.push_back({{"message", d.message}, {"productions", production_list(g, d.productions)}});
    throw WorkbenchError("invalid_grammar", diags.front().message, {{"diagnostics", std::move(list)}});
  }
  if (!g.acyclic()) {
    auto report = cycle_report(g);
    auto comps = Json::array();
    for (const auto& c : report.components) {
      auto members = Json::array();
      for (auto a : c.members) members.push_back(g.symbols().name(a));
      comps.push_back({{"members", std::move(members)}, {"productions", production_list(g, c.productions)}});
    }
    throw WorkbenchError("cyclic_grammar", describe(report, g), {{"components", std::move(comps)}});
  }
  return std::make_shared<const CompiledGrammar>(CompiledGrammar{std::string(text), std::move(surface), std::move(g)});
}

// Serialization

namespace {

const char* width_name(WidthMode m) { return m == WidthMode::Unit ? "unit" : "true"; }

WidthMode width_from_name(const std::string& s) {
  if (s == "unit") return WidthMode::Unit;
  if (s == "true") return WidthMode::True;
  throw WorkbenchError("bad_request", "widths must be \"unit\" or \"true\"");
}

Json options_to_json(const SessionOptions& o) {
  return Json{{"bound", o.bound},
              {"start", o.start},
              {"widths", width_name(o.widths)},
              {"resume_from_last_k", o.resume_from_last_k},
              {"timeout_secs", o.timeout.count()}};
}

SessionOptions options_from_json(const Json& j) {
  SessionOptions o;
  o.bound = j.value("bound", o.bound);
  o.start = j.value("start", std::string());
  o.widths = width_from_name(j.value("widths", std::string("true")));
  o.resume_from_last_k = j.value("resume_from_last_k", false);
  o.timeout = std::chrono::seconds(j.value("timeout_secs", std::int64_t{0}));
  return o;
}

CandidateSet candidates_from_json(const Json& j) {
  CandidateSet out;
  for (const auto& c : j.at("candidates")) {
    auto r = parse_rule_id(c.at("id").get<std::string>());
    if (!r) throw Error("stored candidate id is malformed");
    out.per_rule[r->production].push_back(*r);
  }
  for (const auto& p : j.at("exercised")) out.exercised.insert(p.get<std::size_t>());
  return out;
}

}  // namespace

Json candidates_json(const Round& r) {
  auto out = Json::array();
  if (!r.candidates) return out;
  for (const auto& rule : r.candidates->ordered())
    out.push_back(candidate_to_json(rule, *r.candidates, r.input->surface, r.input->ls2nf));
  return out;
}

Json round_to_json(const Round& r, std::size_t index, WidthMode widths) {
  const auto& g = r.input->ls2nf;
  Json out{{"index", index}, {"input", r.input->text}, {"start", r.start}, {"bound", r.bound}};
  out["outcome"] = r.witness ? "ambiguous" : "none_found";
  out["witness"] = r.witness ? witness_to_json(*r.witness, g, widths) : Json(nullptr);
  auto fb = Json::array();
  for (const auto& item : r.feedback)
    fb.push_back({{"tree", item.tree_index},
                  {"sentence", sentence_to_json(item.sentence, g.symbols())},
                  {"text", render(item.sentence, WidthMode::True, g.symbols())}});
  out["feedback"] = std::move(fb);
  if (r.candidates) {
    out["candidates"] = candidates_json(r);
    out["exercised"] = Json(std::vector<std::size_t>(r.candidates->exercised.begin(), r.candidates->exercised.end()));
  } else {
    out["candidates"] = nullptr;
  }
  out["inconsistent"] = r.inconsistent;
  out["accepted"] = r.accepted;
  out["result"] = r.result ? Json(r.result->text) : Json(nullptr);
  return out;
}

Json session_to_json(const SessionSnapshot& s) {
  auto rounds = Json::array();
  for (std::size_t i = 0; i < s.rounds.size(); ++i) rounds.push_back(round_to_json(s.rounds[i], i, s.options.widths));
  auto productions = Json::array();
  for (const auto& p : s.grammar->ls2nf.productions()) productions.push_back(to_string(p, s.grammar->ls2nf.symbols()));
  return Json{
      {"schema", kSessionSchema},
      {"id", s.id},
      {"source", s.source_text},
      {"grammar", s.grammar->text},
      {"ls2nf", std::move(productions)},
      {"start", s.grammar->surface.start},
      {"options", options_to_json(s.options)},
      {"rounds", std::move(rounds)},
      {"active_job", s.active_job.empty() ? Json(nullptr) : Json(s.active_job)},
  };
}

SessionSnapshot session_from_json(const Json& j) {
  if (j.value("schema", 0) != kSessionSchema)
    throw Error("unsupported session schema " + std::to_string(j.value("schema", 0)));
  SessionSnapshot s;
  s.id = j.at("id").get<std::string>();
  s.source_text = j.at("source").get<std::string>();
  s.options = options_from_json(j.at("options"));
  auto source = CompiledGrammar::compile(s.source_text);
  CompiledPtr current = source;
  for (const auto& rj : j.at("rounds")) {
    Round r;
    auto input = rj.at("input").get<std::string>();
    r.input = input == current->text ? current : CompiledGrammar::compile(input);
    const auto& g = r.input->ls2nf;
    r.start = rj.at("start").get<std::string>();
    r.bound = rj.at("bound").get<std::size_t>();
    if (!rj.at("witness").is_null()) r.witness = witness_from_json(rj.at("witness"), g);
    for (const auto& f : rj.at("feedback"))
      r.feedback.push_back({f.at("tree").get<std::size_t>(), sentence_from_json(f.at("sentence"), g.symbols())});
    if (!rj.at("candidates").is_null()) r.candidates = candidates_from_json(rj);
    r.inconsistent = rj.value("inconsistent", false);
    r.accepted = rj.at("accepted").get<std::vector<std::string>>();
    if (!rj.at("result").is_null()) {
      r.result = CompiledGrammar::compile(rj.at("result").get<std::string>());
      current = r.result;
    }
    s.rounds.push_back(std::move(r));
  }
  auto text = j.at("grammar").get<std::string>();
  s.grammar = text == current->text ? current : CompiledGrammar::compile(text);
  return s;
}

std::string tree_to_text(const ParseTree& t, const SymbolTable& symbols) {
  std::ostringstream out;
  auto walk = [&](auto&& self, const ParseTree& n, int depth) -> void {
    out << std::string(static_cast<std::size_t>(depth) * 2, ' ') << symbols.name(n.root());
    if (n.kind() == ParseTree::Kind::Eps) out << "  ε";
    if (n.kind() == ParseTree::Kind::Token)
      out << "  " << symbols.name(n.tok().term) << "@(" << n.tok().line << "," << n.tok().col << ")";
    out << '\n';
    for (const auto& c : n.children()) self(self, *c, depth + 1);
  };
  walk(walk, t, 0);
  return out.str();
}

// Workbench

struct Workbench::Session {
  mutable std::mutex mutex;
  SessionSnapshot data;
};

struct Workbench::Job {
  mutable std::mutex mutex;
  mutable std::condition_variable done;
  JobStatus status;
  std::jthread thread;
};

Workbench::Workbench(Config config) : config_(std::move(config)) {
  if (!config_.data_dir.empty()) {
    fs::create_directories(config_.data_dir);
    load_all();
  }
}

Workbench::~Workbench() {
  std::vector<std::shared_ptr<Job>> jobs;
  {
    std::lock_guard lock(mutex_);
    for (auto& [_, j] : jobs_) jobs.push_back(j);
  }
  for (auto& j : jobs) j->thread.request_stop();
  for (auto& j : jobs)
    if (j->thread.joinable()) j->thread.join();
}

void Workbench::load_all() {
  for (const auto& entry : fs::directory_iterator(config_.data_dir)) {
    if (entry.path().extension() != ".json") continue;
    try {
      std::ifstream in(entry.path());
      auto data = session_from_json(Json::parse(in));
      auto s = std::make_shared<Session>();
      s->data = std::move(data);
      auto digits = s->data.id.substr(1);
      if (!digits.empty() && std::all_of(digits.begin(), digits.end(), ::isdigit))
        next_session_ = std::max(next_session_, std::stoul(digits) + 1);
      sessions_[s->data.id] = std::move(s);
    } catch (const std::exception& e) {
      std::cerr << "layit: skipping " << entry.path().string() << ": " << e.what() << '\n';
    }
  }
}

void Workbench::persist(const Session& s) const {
  if (config_.data_dir.empty()) return;
  auto path = config_.data_dir / (s.data.id + ".json");
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    auto j = session_to_json(s.data);
    j["active_job"] = nullptr;
    out << j.dump(2) << '\n';
    if (!out) throw WorkbenchError("storage_error", "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::shared_ptr<Workbench::Session> Workbench::find_session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw WorkbenchError("not_found", "no session '" + id + "'");
  return it->second;
}

std::shared_ptr<Workbench::Job> Workbench::find_job(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = jobs_.find(id);
  if (it == jobs_.end()) throw WorkbenchError("not_found", "no job '" + id + "'");
  return it->second;
}

bool Workbench::busy(const Session& s) const {
  if (s.data.active_job.empty()) return false;
  auto job = find_job(s.data.active_job);
  std::lock_guard lock(job->mutex);
  return !job->status.finished();
}

SessionSnapshot Workbench::create_session(std::string_view grammar_text, SessionOptions options) {
  auto compiled = CompiledGrammar::compile(grammar_text);
  if (!options.start.empty() && !compiled->ls2nf.symbols().find_nonterminal(options.start))
    throw WorkbenchError("unknown_start", "unknown start symbol '" + options.start + "'");
  if (options.bound == 0) throw WorkbenchError("bad_request", "bound must be positive");
  auto s = std::make_shared<Session>();
  s->data.source_text = std::string(grammar_text);
  s->data.grammar = compiled;
  s->data.options = std::move(options);
  {
    std::lock_guard lock(mutex_);
    s->data.id = "s" + std::to_string(next_session_++);
    sessions_[s->data.id] = s;
  }
  std::lock_guard lock(s->mutex);
  persist(*s);
  return s->data;
}

SessionSnapshot Workbench::session(const std::string& id) const {
  auto s = find_session(id);
  std::lock_guard lock(s->mutex);
  return s->data;
}

std::vector<std::string> Workbench::session_ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : sessions_) out.push_back(id);
  return out;
}

JobStatus Workbench::start_check(const std::string& session_id, std::optional<std::size_t> bound,
                                 std::optional<std::string> start) {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mutex);
  if (busy(*s)) throw WorkbenchError("busy", "a check is already running", {{"job", s->data.active_job}});

  const auto& opts = s->data.options;
  auto grammar = s->data.grammar;
  const auto& symbols = grammar->ls2nf.symbols();
  auto start_name = start.value_or(opts.start.empty() ? grammar->surface.start : opts.start);
  auto start_nt = symbols.find_nonterminal(start_name);
  if (!start_nt) throw WorkbenchError("unknown_start", "unknown start symbol '" + start_name + "'");

  CheckOptions check;
  check.bound = bound.value_or(opts.bound);
  if (check.bound == 0) throw WorkbenchError("bad_request", "bound must be positive");
  check.start = *start_nt;
  check.widths = opts.widths;
  check.solver = config_.solver;
  check.solver.timeout = opts.timeout;
  if (opts.resume_from_last_k) {
    for (auto it = s->data.rounds.rbegin(); it != s->data.rounds.rend(); ++it) {
      if (!it->witness) continue;
      if (it->start == start_name) check.from_k = std::max<std::size_t>(1, it->witness->k);
      break;
    }
  }
  if (check.from_k > check.bound)
    throw WorkbenchError("bad_request", "bound " + std::to_string(check.bound) + " is below the resume length " +
                                            std::to_string(check.from_k));

  auto job = std::make_shared<Job>();
  {
    std::lock_guard wl(mutex_);
    job->status.id = "j" + std::to_string(next_job_++);
  }
  job->status.session = session_id;
  job->status.from_k = check.from_k;
  job->status.bound = check.bound;
  job->status.start = start_name;
  s->data.active_job = job->status.id;
  auto snapshot = job->status;
  job->thread = std::jthread([this, s, job, grammar, check](std::stop_token stop) {
    run_job(s, job, grammar, check, stop);
  });
  {
    std::lock_guard wl(mutex_);
    jobs_[snapshot.id] = job;
  }
  return snapshot;
}

void Workbench::run_job(std::shared_ptr<Session> s, std::shared_ptr<Job> job, CompiledPtr grammar,
                        CheckOptions options, std::stop_token stop) {
  {
    std::lock_guard lock(job->mutex);
    job->status.state = JobState::Running;
  }
  auto on_progress = [&](const ProgressEvent& e) {
    std::lock_guard lock(job->mutex);
    job->status.current_k = e.k;
    if (e.formula_nodes) job->status.formula_nodes = e.formula_nodes;
  };

  CheckResult result;
  JobState final_state = JobState::Done;
  std::string error;
  try {
    result = find_shortest_ambiguous(grammar->ls2nf, options, on_progress, stop);
    if (result.aborted) {
      final_state = JobState::Failed;
      error = result.abort_reason;
    }
  } catch (const smt::Cancelled&) {
    final_state = JobState::Cancelled;
  } catch (const std::exception& e) {
    final_state = JobState::Failed;
    error = e.what();
  }

  std::lock_guard session_lock(s->mutex);
  if (final_state == JobState::Done) {
    Round round;
    round.input = grammar;
    round.start = grammar->ls2nf.symbols().name(*options.start);
    round.bound = options.bound;
    round.witness = result.witness;
    auto& rounds = s->data.rounds;
    if (!rounds.empty() && !rounds.back().closed())
      rounds.back() = std::move(round);
    else
      rounds.push_back(std::move(round));
    try {
      persist(*s);
    } catch (const std::exception& e) {
      final_state = JobState::Failed;
      error = e.what();
    }
  }
  s->data.active_job.clear();
  std::lock_guard lock(job->mutex);
  job->status.state = final_state;
  job->status.error = error;
  job->status.last_completed_k = result.last_completed_k;
  if (final_state == JobState::Done && result.witness) job->status.witness_k = result.witness->k;
  job->done.notify_all();
}

JobStatus Workbench::job(const std::string& id) const {
  auto j = find_job(id);
  std::lock_guard lock(j->mutex);
  return j->status;
}

JobStatus Workbench::wait(const std::string& id) const {
  auto j = find_job(id);
  std::unique_lock lock(j->mutex);
  j->done.wait(lock, [&] { return j->status.finished(); });
  return j->status;
}

JobStatus Workbench::cancel(const std::string& id) {
  auto j = find_job(id);
  {
    std::lock_guard lock(j->mutex);
    if (j->status.finished()) return j->status;
  }
  j->thread.request_stop();
  return wait(id);
}

SynthesisResult Workbench::submit_feedback(const std::string& session_id, std::vector<FeedbackItem> items) {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mutex);
  if (busy(*s)) throw WorkbenchError("busy", "a check is running", {{"job", s->data.active_job}});
  auto& rounds = s->data.rounds;
  if (rounds.empty() || rounds.back().closed() || !rounds.back().witness)
    throw WorkbenchError("no_witness", "there is no ambiguous sentence to give feedback on");
  if (items.empty()) throw WorkbenchError("bad_request", "feedback needs at least one formatted sentence");
  auto& round = rounds.back();
  SynthesisResult result;
  try {
    result = synthesize(round.input->ls2nf, *round.witness, items);
  } catch (const Error& e) {
    throw WorkbenchError("feedback_mismatch", e.what());
  }
  round.feedback = std::move(items);
  round.inconsistent = std::holds_alternative<Inconsistent>(result);
  if (round.inconsistent)
    round.candidates.reset();
  else
    round.candidates = std::get<CandidateSet>(result);
  persist(*s);
  return result;
}

SynthesisResult Workbench::submit_feedback_text(const std::string& session_id,
                                                std::span<const std::pair<std::size_t, std::string>> items) {
  CompiledPtr grammar;
  {
    auto s = find_session(session_id);
    std::lock_guard lock(s->mutex);
    if (s->data.rounds.empty()) throw WorkbenchError("no_witness", "run a check first");
    grammar = s->data.rounds.back().input;
  }
  std::vector<FeedbackItem> parsed;
  for (const auto& [tree, text] : items) {
    try {
      parsed.push_back({tree, parse_formatted_text(text, grammar->ls2nf.symbols())});
    } catch (const Error& e) {
      throw WorkbenchError("bad_feedback", e.what(), {{"tree", tree}});
    }
  }
  return submit_feedback(session_id, std::move(parsed));
}

std::string Workbench::accept_candidates(const std::string& session_id, std::span<const std::string> ids) {
  auto s = find_session(session_id);
  std::lock_guard lock(s->mutex);
  if (busy(*s)) throw WorkbenchError("busy", "a check is running", {{"job", s->data.active_job}});
  auto& rounds = s->data.rounds;
  if (rounds.empty() || rounds.back().closed() || !rounds.back().candidates)
    throw WorkbenchError("no_candidates", "there are no candidates to accept");
  auto& round = rounds.back();
  const auto& before = *round.input;
  if (ids.empty()) throw WorkbenchError("empty_selection", "accept at least one candidate");

  std::vector<TransformRule> rules;
  std::set<std::size_t> targets;
  for (const auto& id : ids) {
    auto r = parse_rule_id(id);
    if (!r || !round.candidates->contains(*r)) throw WorkbenchError("unknown_candidate", "no candidate '" + id + "'");
    if (!targets.insert(r->production).second)
      throw WorkbenchError("conflicting_selection", "two candidates selected for the same rule",
                           {{"production", to_string(before.ls2nf.production(r->production), before.ls2nf.symbols())}});
    if (!display(*r, before.surface, before.ls2nf).liftable)
      throw WorkbenchError("unliftable", "candidate '" + id + "' has no form in the grammar syntax",
                           {{"production", to_string(before.ls2nf.production(r->production), before.ls2nf.symbols())}});
    rules.push_back(*r);
  }

  Grammar refined = apply_rules(before.ls2nf, rules);
  std::vector<ConstraintAttachment> attachments;
  for (const auto& r : rules) attachments.push_back({r.production, r.constraint});
  auto lifted = lift_constraints(before.surface, before.ls2nf, attachments);
  auto after = CompiledGrammar::compile(print_ebnf(lifted));
  if (!same_productions(refined, after->ls2nf))
    throw WorkbenchError("internal", "lifted grammar text does not desugar to the refined grammar");
  if (!is_refinement(before.ls2nf, after->ls2nf))
    throw WorkbenchError("internal", "accepted candidates did not produce a refinement");

  round.accepted.assign(ids.begin(), ids.end());
  round.result = after;
  s->data.grammar = after;
  persist(*s);
  return after->text;
}

Json Workbench::session_json(const std::string& id) const { return session_to_json(session(id)); }

Json Workbench::job_json(const std::string& id) const {
  auto st = job(id);
  Json out{{"id", st.id},
           {"session", st.session},
           {"status", std::string(name(st.state))},
           {"start", st.start},
           {"from_k", st.from_k},
           {"bound", st.bound},
           {"current_k", st.current_k},
           {"formula_nodes", st.formula_nodes},
           {"last_completed_k", st.last_completed_k}};
  if (st.state == JobState::Done) {
    out["result"] = st.witness_k ? Json{{"outcome", "ambiguous"}, {"k", *st.witness_k}}
                                 : Json{{"outcome", "none_found"}, {"bound", st.bound}};
  }
  if (!st.error.empty()) out["error"] = st.error;
  return out;
}

}  // namespace layit
