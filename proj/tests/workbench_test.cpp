#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "layit/api.hpp"
#include "layit/workbench.hpp"
#include "support.hpp"

using namespace layit;
using namespace layit::testing;

namespace {

namespace fs = std::filesystem;

const char* kBlock = "start block;\nblock: stmt+;\nstmt: \"nop\" | \"do\" block;\n";
const char* kRefined = "start block;\nblock: aligned+(offside(stmt));\nstmt: \"nop\" | \"do\" block;\n";

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("layit-workbench-" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slow_solver() {
  auto dir = fs::temp_directory_path() / "layit-fake-solvers";
  fs::create_directories(dir);
  auto path = dir / "sleepy.sh";
  std::ofstream(path) << "#!/bin/sh\nsleep 30\necho unknown\n";
  fs::permissions(path, fs::perms::owner_all);
  return path.string();
}

Workbench::Config config(fs::path dir = {}) { return {std::move(dir), solver()}; }

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const WorkbenchError& e) {
    return e.code();
  }
  return "";
}

const std::vector<std::pair<std::size_t, std::string>> kFeedback{{0, "do\n  nop\n  nop\n"}, {1, "do\n  nop\nnop\n"}};

// Runs the refinement loop of the running example to its end.
std::string run_example(Workbench& wb) {
  auto id = wb.create_session(kBlock).id;
  auto job = wb.wait(wb.start_check(id, 5).id);
  EXPECT_EQ(job.state, JobState::Done);
  EXPECT_EQ(job.witness_k, 3u);
  auto result = wb.submit_feedback_text(id, kFeedback);
  EXPECT_TRUE(std::holds_alternative<CandidateSet>(result));
  std::vector<std::string> ids{"p2-align", "p0-offside"};
  EXPECT_EQ(wb.accept_candidates(id, ids), kRefined);
  auto done = wb.wait(wb.start_check(id, 8).id);
  EXPECT_EQ(done.state, JobState::Done);
  EXPECT_FALSE(done.witness_k);
  return id;
}

}  // namespace

TEST(Compile, Errors) {
  EXPECT_EQ(error_code([] { CompiledGrammar::compile("s: \"a\" t;"); }), "parse_error");
  try {
    CompiledGrammar::compile("start a;\na: b | \"x\";\nb: a;\n");
    FAIL();
  } catch (const WorkbenchError& e) {
    EXPECT_EQ(e.code(), "cyclic_grammar");
    ASSERT_EQ(e.details()["components"].size(), 1u);
    EXPECT_EQ(e.details()["components"][0]["productions"].size(), 2u);
  }
  try {
    CompiledGrammar::compile("s: t\n  | \"a\" @;");
    FAIL();
  } catch (const WorkbenchError& e) {
    EXPECT_EQ(e.code(), "parse_error");
    EXPECT_EQ(e.details()["line"], 2);
  }
  EXPECT_EQ(error_code([] { CompiledGrammar::compile("s: offside(t) | single(t); t: \"a\";"); }), "invalid_grammar");
}

TEST(Workbench, CreateSession) {
  Workbench wb(config());
  auto s = wb.create_session(kBlock);
  EXPECT_EQ(s.id, "s1");
  EXPECT_TRUE(s.rounds.empty());
  EXPECT_EQ(wb.create_session(kBlock).id, "s2");
  EXPECT_EQ(wb.session_ids(), (std::vector<std::string>{"s1", "s2"}));
  EXPECT_EQ(error_code([&] { wb.session("s9"); }), "not_found");
  SessionOptions bad;
  bad.start = "nowhere";
  EXPECT_EQ(error_code([&] { wb.create_session(kBlock, bad); }), "unknown_start");
}

TEST(Workbench, RunningExampleLoop) {
  Workbench wb(config());
  auto id = run_example(wb);
  auto s = wb.session(id);
  ASSERT_EQ(s.rounds.size(), 2u);
  EXPECT_EQ(s.grammar->text, kRefined);
  EXPECT_EQ(s.rounds[0].accepted, (std::vector<std::string>{"p2-align", "p0-offside"}));
  EXPECT_TRUE(s.rounds[0].closed());
  EXPECT_FALSE(s.rounds[1].witness);
  EXPECT_EQ(s.rounds[1].bound, 8u);
  for (const auto& r : s.rounds)
    if (r.closed()) EXPECT_TRUE(is_refinement(r.input->ls2nf, r.result->ls2nf));
}

TEST(Workbench, FeedbackAndAcceptErrors) {
  Workbench wb(config());
  auto id = wb.create_session(kBlock).id;
  EXPECT_EQ(error_code([&] { wb.submit_feedback_text(id, kFeedback); }), "no_witness");
  wb.wait(wb.start_check(id, 5).id);
  std::vector<std::pair<std::size_t, std::string>> wrong{{0, "do\n  nop\n"}};
  EXPECT_EQ(error_code([&] { wb.submit_feedback_text(id, wrong); }), "feedback_mismatch");
  std::vector<std::pair<std::size_t, std::string>> unknown_tree{{7, "do\n  nop\n  nop\n"}};
  EXPECT_EQ(error_code([&] { wb.submit_feedback_text(id, unknown_tree); }), "feedback_mismatch");
  std::vector<std::pair<std::size_t, std::string>> unknown_token{{0, "do\n  nop\n  pass\n"}};
  EXPECT_EQ(error_code([&] { wb.submit_feedback_text(id, unknown_token); }), "bad_feedback");
  std::vector<std::pair<std::size_t, std::string>> none;
  EXPECT_EQ(error_code([&] { wb.submit_feedback_text(id, none); }), "bad_request");

  wb.submit_feedback_text(id, kFeedback);
  auto accept = [&](std::vector<std::string> ids) { return error_code([&] { wb.accept_candidates(id, ids); }); };
  EXPECT_EQ(accept({}), "empty_selection");
  EXPECT_EQ(accept({"p2-indent"}), "unknown_candidate");
  EXPECT_EQ(accept({"bogus"}), "unknown_candidate");
  EXPECT_EQ(accept({"p0-offside", "p0-offside_align"}), "conflicting_selection");
  EXPECT_EQ(accept({"p1-offside"}), "unliftable");
  EXPECT_EQ(wb.session(id).grammar->text, kBlock);
}

TEST(Workbench, InconsistentFeedback) {
  Workbench wb(config());
  auto id = wb.create_session("start s; s: t t; t: \"a\" | \"a\" \"a\";").id;
  auto job = wb.wait(wb.start_check(id, 4).id);
  ASSERT_TRUE(job.witness_k);
  auto s = wb.session(id);
  auto n = s.rounds.back().witness->k;
  std::string text;
  for (std::size_t i = 0; i < n; ++i) text += "a  ";
  text += "\n";
  std::vector<std::pair<std::size_t, std::string>> items{{0, text}};
  auto result = wb.submit_feedback_text(id, items);
  EXPECT_TRUE(std::holds_alternative<Inconsistent>(result));
  EXPECT_TRUE(wb.session(id).rounds.back().inconsistent);
}

TEST(Workbench, BusyAndCancel) {
  Workbench wb({{}, {slow_solver()}});
  auto id = wb.create_session(kBlock).id;
  auto job = wb.start_check(id, 5);
  EXPECT_EQ(error_code([&] { wb.start_check(id, 5); }), "busy");
  EXPECT_EQ(error_code([&] { wb.accept_candidates(id, std::vector<std::string>{"p0-offside"}); }), "busy");
  auto started = std::chrono::steady_clock::now();
  wb.cancel(job.id);
  auto final = wb.wait(job.id);
  EXPECT_EQ(final.state, JobState::Cancelled);
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::seconds(10));
  EXPECT_TRUE(wb.session(id).active_job.empty());
  EXPECT_EQ(error_code([&] { wb.job("j99"); }), "not_found");
}

TEST(Workbench, UnknownStartForCheck) {
  Workbench wb(config());
  auto id = wb.create_session(kBlock).id;
  EXPECT_EQ(error_code([&] { wb.start_check(id, 3, "nothing"); }), "unknown_start");
  auto job = wb.wait(wb.start_check(id, 5, "stmt").id);
  EXPECT_EQ(job.state, JobState::Done);
  EXPECT_EQ(job.start, "stmt");
  EXPECT_EQ(job.witness_k, 4u);
  auto s = wb.session(id);
  EXPECT_EQ(terminals_of(s.rounds.back().witness->sentence, s.grammar->ls2nf.symbols()), "do do nop nop");
}

TEST(Workbench, ResumeFromLastWitnessLength) {
  Workbench wb(config());
  SessionOptions opts;
  opts.resume_from_last_k = true;
  auto id = wb.create_session(kBlock, opts).id;
  EXPECT_EQ(wb.wait(wb.start_check(id, 5).id).from_k, 1u);
  wb.submit_feedback_text(id, kFeedback);
  wb.accept_candidates(id, std::vector<std::string>{"p2-align"});
  auto next = wb.wait(wb.start_check(id, 6).id);
  EXPECT_EQ(next.from_k, 3u);
  auto other_start = wb.wait(wb.start_check(id, 4, "stmt").id);
  EXPECT_EQ(other_start.from_k, 1u);
}

TEST(Workbench, PersistsAndReloads) {
  auto dir = fresh_dir("persist");
  std::string id;
  Json before;
  {
    Workbench wb(config(dir));
    id = run_example(wb);
    before = wb.session_json(id);
  }
  ASSERT_TRUE(fs::exists(dir / (id + ".json")));
  Workbench again(config(dir));
  EXPECT_EQ(again.session_ids(), std::vector<std::string>{id});
  EXPECT_EQ(again.session_json(id), before);
  EXPECT_EQ(again.create_session(kBlock).id, "s2");

  auto snap = session_from_json(before);
  EXPECT_EQ(session_to_json(snap), before);
  auto broken = before;
  broken["schema"] = 99;
  EXPECT_THROW(session_from_json(broken), Error);
}

// Replaying the recorded feedback and selections of a session gives the
// same grammar at every round.
TEST(Workbench, ReplayIsDeterministic) {
  Workbench wb(config());
  auto id = run_example(wb);
  auto original = wb.session(id);
  Workbench fresh(config());
  auto replay = fresh.create_session(original.source_text).id;
  for (const auto& r : original.rounds) {
    auto job = fresh.wait(fresh.start_check(replay, r.bound, r.start).id);
    ASSERT_EQ(job.witness_k.has_value(), r.witness.has_value());
    auto now = fresh.session(replay);
    ASSERT_EQ(now.rounds.back().input->text, r.input->text);
    if (!r.witness) continue;
    EXPECT_EQ(now.rounds.back().witness->sentence, r.witness->sentence);
    if (!r.closed()) continue;
    fresh.submit_feedback(replay, r.feedback);
    EXPECT_EQ(fresh.accept_candidates(replay, r.accepted), r.result->text);
  }
  EXPECT_EQ(fresh.session(replay).grammar->text, original.grammar->text);
}

TEST(Workbench, RefinementChainOnWhileFragment) {
  Workbench wb(config());
  auto id = wb.create_session(read_file(grammar_path("while.lsg"))).id;
  auto job = wb.wait(wb.start_check(id, 6).id);
  ASSERT_EQ(job.witness_k, 5u);
  auto s = wb.session(id);
  const auto& w = *s.rounds.back().witness;
  EXPECT_EQ(terminals_of(w.sentence, s.grammar->ls2nf.symbols()), "while e : pass pass");
  ASSERT_EQ(w.trees.size(), 2u);
  // The tree whose outer list has a single element nests both statements.
  bool first_nests = w.trees[0]->children()[0]->kind() == ParseTree::Kind::Unary;
  std::vector<std::pair<std::size_t, std::string>> items{{first_nests ? 0u : 1u, "while e :\n  pass\n  pass\n"},
                                                         {first_nests ? 1u : 0u, "while e :\n  pass\npass\n"}};
  auto result = wb.submit_feedback_text(id, items);
  ASSERT_TRUE(std::holds_alternative<CandidateSet>(result));
  const auto& c = std::get<CandidateSet>(result);
  EXPECT_EQ(c.size(), 9u);
  std::vector<std::string> chosen{"p2-align", "p0-offside", "p6-indent"};
  EXPECT_EQ(wb.accept_candidates(id, chosen),
            "start block;\nblock: aligned+(offside(stmt));\nstmt: while-stmt | \"pass\";\n"
            "while-stmt: indented(while-test, block);\nwhile-test: \"while\" \"e\" \":\";\n");
  auto clean = wb.wait(wb.start_check(id, 10).id);
  EXPECT_EQ(clean.state, JobState::Done);
  EXPECT_FALSE(clean.witness_k);
  EXPECT_EQ(clean.last_completed_k, 10u);
  auto final = wb.session(id);
  for (const auto& r : final.rounds)
    if (r.closed()) EXPECT_TRUE(is_refinement(r.input->ls2nf, r.result->ls2nf));
}

namespace {

class HttpFixture : public ::testing::Test {
protected:
  void start(Workbench::Config c) {
    wb_ = std::make_unique<Workbench>(std::move(c));
    install_routes(server_, *wb_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::pair<int, Json> post(const std::string& path, const Json& body) {
    auto r = client_->Post(path, body.dump(), "application/json");
    return {r->status, Json::parse(r->body)};
  }

  std::pair<int, Json> get(const std::string& path) {
    auto r = client_->Get(path);
    return {r->status, Json::parse(r->body)};
  }

  Json wait_job(const std::string& id) {
    for (int i = 0; i < 600; ++i) {
      auto [status, j] = get("/api/jobs/" + id);
      if (j["status"] != "queued" && j["status"] != "running") return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    return {};
  }

  std::unique_ptr<Workbench> wb_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace

TEST_F(HttpFixture, RunningExampleOverHttp) {
  start(config());
  auto [created, session] = post("/api/sessions", {{"grammar", kBlock}, {"options", {{"bound", 5}}}});
  ASSERT_EQ(created, 201);
  std::string id = session["id"];
  EXPECT_EQ(session["options"]["bound"], 5);

  auto [accepted_status, job] = post("/api/sessions/" + id + "/check", Json::object());
  ASSERT_EQ(accepted_status, 202);
  EXPECT_EQ(job["bound"], 5);
  auto finished = wait_job(job["id"]);
  EXPECT_EQ(finished["status"], "done");
  EXPECT_EQ(finished["result"]["outcome"], "ambiguous");
  EXPECT_EQ(finished["result"]["k"], 3);

  auto [ws, witness] = get("/api/sessions/" + id + "/witness");
  ASSERT_EQ(ws, 200);
  EXPECT_EQ(witness["outcome"], "ambiguous");
  ASSERT_EQ(witness["witness"]["trees"].size(), 2u);
  EXPECT_EQ(witness["witness"]["trees"][0]["nt"], "block");
  EXPECT_EQ(witness["witness"]["sentence"].size(), 3u);

  Json items = Json::array();
  for (const auto& [tree, text] : kFeedback) items.push_back({{"tree", tree}, {"text", text}});
  auto [fs_status, fb] = post("/api/sessions/" + id + "/feedback", {{"items", items}});
  ASSERT_EQ(fs_status, 200);
  EXPECT_FALSE(fb["inconsistent"].get<bool>());
  std::vector<std::string> cids;
  for (const auto& c : fb["candidates"]) cids.push_back(c["id"]);
  EXPECT_EQ(cids, (std::vector<std::string>{"p0-offside", "p0-offside_align", "p1-offside", "p1-offside_align",
                                            "p2-align", "p3-offside_align", "p6-indent"}));
  EXPECT_EQ(fb["candidates"][4]["rule"], "block: aligned+(stmt)");
  EXPECT_EQ(fb["candidates"][4]["constraint"], "align");
  EXPECT_EQ(fb["candidates"][4]["ls2nf_target"], 2);
  EXPECT_FALSE(fb["candidates"][2]["liftable"].get<bool>());

  auto [bad_accept, err] = post("/api/sessions/" + id + "/accept", {{"ids", Json::array()}});
  EXPECT_EQ(bad_accept, 400);
  EXPECT_EQ(err["code"], "empty_selection");

  auto [as, acc] = post("/api/sessions/" + id + "/accept", {{"ids", {"p2-align", "p0-offside"}}});
  ASSERT_EQ(as, 200);
  EXPECT_EQ(acc["grammar"], kRefined);

  auto [cs, second] = post("/api/sessions/" + id + "/check", {{"bound", 8}});
  ASSERT_EQ(cs, 202);
  auto none = wait_job(second["id"]);
  EXPECT_EQ(none["result"]["outcome"], "none_found");
  auto [ws2, w2] = get("/api/sessions/" + id + "/witness");
  EXPECT_EQ(w2["outcome"], "none_found");
  EXPECT_EQ(w2["bound"], 8);

  auto [hs, history] = get("/api/sessions/" + id + "/history");
  ASSERT_EQ(hs, 200);
  ASSERT_EQ(history["rounds"].size(), 2u);
  EXPECT_EQ(history["grammar"], kRefined);
}

TEST_F(HttpFixture, ErrorResponses) {
  start(config());
  auto [missing, e1] = get("/api/sessions/nope");
  EXPECT_EQ(missing, 404);
  EXPECT_EQ(e1["code"], "not_found");
  auto [cyclic, e2] = post("/api/sessions", {{"grammar", "start a; a: b | \"x\"; b: a;"}});
  EXPECT_EQ(cyclic, 400);
  EXPECT_EQ(e2["code"], "cyclic_grammar");
  EXPECT_TRUE(e2["details"]["components"].is_array());
  auto [no_field, e3] = post("/api/sessions", Json::object());
  EXPECT_EQ(no_field, 400);
  EXPECT_EQ(e3["code"], "bad_request");
  auto raw = client_->Post("/api/sessions", "{not json", "application/json");
  EXPECT_EQ(raw->status, 400);
  EXPECT_EQ(Json::parse(raw->body)["code"], "bad_request");
  auto [nowhere, e4] = get("/api/elsewhere");
  EXPECT_EQ(nowhere, 404);
  EXPECT_EQ(e4["code"], "not_found");
  auto [created, s] = post("/api/sessions", {{"grammar", kBlock}});
  auto [no_witness, e5] = get("/api/sessions/" + s["id"].get<std::string>() + "/witness");
  EXPECT_EQ(no_witness, 400);
  EXPECT_EQ(e5["code"], "no_witness");
}

TEST_F(HttpFixture, BusyAndCancel) {
  start({{}, {slow_solver()}});
  auto [created, s] = post("/api/sessions", {{"grammar", kBlock}});
  std::string id = s["id"];
  auto [first, job] = post("/api/sessions/" + id + "/check", {{"bound", 4}});
  ASSERT_EQ(first, 202);
  auto [second, busy] = post("/api/sessions/" + id + "/check", {{"bound", 4}});
  EXPECT_EQ(second, 409);
  EXPECT_EQ(busy["code"], "busy");
  auto [cs, cancelled] = post("/api/jobs/" + job["id"].get<std::string>() + "/cancel", Json::object());
  EXPECT_EQ(cs, 200);
  EXPECT_EQ(wait_job(job["id"])["status"], "cancelled");
}
