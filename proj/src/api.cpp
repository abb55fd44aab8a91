#include "layit/api.hpp"

#include <httplib.h>

#include <iostream>

namespace layit {

int http_status(const std::string& code) {
  if (code == "not_found") return 404;
  if (code == "busy") return 409;
  if (code == "internal" || code == "storage_error") return 500;
  return 400;
}

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void fail(httplib::Response& res, const WorkbenchError& e) { reply(res, http_status(e.code()), e.to_json()); }

Json body_of(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    auto j = Json::parse(req.body);
    if (!j.is_object()) throw WorkbenchError("bad_request", "request body must be a JSON object");
    return j;
  } catch (const Json::parse_error& e) {
    throw WorkbenchError("bad_request", std::string("malformed JSON: ") + e.what());
  }
}

template <typename T>
T field(const Json& body, const char* key) {
  try {
    return body.at(key).get<T>();
  } catch (const Json::exception&) {
    throw WorkbenchError("bad_request", std::string("missing or mistyped field '") + key + "'");
  }
}

// Wraps a handler so that every failure turns into an error document.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const WorkbenchError& e) {
      fail(res, e);
    } catch (const Json::exception& e) {
      fail(res, WorkbenchError("bad_request", e.what()));
    } catch (const std::exception& e) {
      fail(res, WorkbenchError("internal", e.what()));
    }
  };
}

Json witness_document(const SessionSnapshot& s) {
  if (s.rounds.empty()) throw WorkbenchError("no_witness", "no check has finished yet");
  const auto& r = s.rounds.back();
  auto index = s.rounds.size() - 1;
  if (!r.witness) return Json{{"round", index}, {"outcome", "none_found"}, {"bound", r.bound}};
  return Json{{"round", index},
              {"outcome", "ambiguous"},
              {"witness", witness_to_json(*r.witness, r.input->ls2nf, s.options.widths)}};
}

}  // namespace

void install_routes(httplib::Server& server, Workbench& wb) {
  const std::string id = "([A-Za-z0-9_-]+)";

  server.Post("/api/sessions", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
                auto body = body_of(req);
                SessionOptions opts;
                if (auto it = body.find("options"); it != body.end() && it->is_object()) {
                  opts.bound = it->value("bound", opts.bound);
                  opts.start = it->value("start", std::string());
                  auto widths = it->value("widths", std::string("true"));
                  if (widths != "true" && widths != "unit")
                    throw WorkbenchError("bad_request", "widths must be \"unit\" or \"true\"");
                  opts.widths = widths == "unit" ? WidthMode::Unit : WidthMode::True;
                  opts.resume_from_last_k = it->value("resume_from_last_k", false);
                  opts.timeout = std::chrono::seconds(it->value("timeout_secs", std::int64_t{0}));
                }
                auto s = wb.create_session(field<std::string>(body, "grammar"), opts);
                reply(res, 201, session_to_json(s));
              }));

  server.Get("/api/sessions/" + id, guarded([&wb](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, wb.session_json(req.matches[1]));
             }));

  server.Post("/api/sessions/" + id + "/check", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
                auto body = body_of(req);
                std::optional<std::size_t> bound;
                std::optional<std::string> start;
                if (body.contains("bound")) bound = field<std::size_t>(body, "bound");
                if (body.contains("start") && !body["start"].is_null()) start = field<std::string>(body, "start");
                auto job = wb.start_check(req.matches[1], bound, start);
                reply(res, 202, wb.job_json(job.id));
              }));

  server.Get("/api/jobs/" + id, guarded([&wb](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, wb.job_json(req.matches[1]));
             }));

  server.Post("/api/jobs/" + id + "/cancel", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
                wb.cancel(req.matches[1]);
                reply(res, 200, wb.job_json(req.matches[1]));
              }));

  server.Get("/api/sessions/" + id + "/witness", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
               reply(res, 200, witness_document(wb.session(req.matches[1])));
             }));

  server.Post("/api/sessions/" + id + "/feedback",
              guarded([&wb](const httplib::Request& req, httplib::Response& res) {
                std::string sid = req.matches[1];
                auto body = body_of(req);
                auto items = field<Json>(body, "items");
                if (!items.is_array()) throw WorkbenchError("bad_request", "'items' must be an array");
                std::vector<std::pair<std::size_t, std::string>> texts;
                for (const auto& item : items) texts.emplace_back(field<std::size_t>(item, "tree"), field<std::string>(item, "text"));
                auto result = wb.submit_feedback_text(sid, texts);
                auto s = wb.session(sid);
                if (std::holds_alternative<Inconsistent>(result)) {
                  reply(res, 200, Json{{"inconsistent", true}, {"candidates", Json::array()}});
                } else {
                  reply(res, 200, Json{{"inconsistent", false}, {"candidates", candidates_json(s.rounds.back())}});
                }
              }));

  server.Post("/api/sessions/" + id + "/accept", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
                std::string sid = req.matches[1];
                auto body = body_of(req);
                auto ids = field<std::vector<std::string>>(body, "ids");
                auto text = wb.accept_candidates(sid, ids);
                reply(res, 200, Json{{"grammar", text}, {"session", wb.session_json(sid)}});
              }));

  server.Get("/api/sessions/" + id + "/history", guarded([&wb](const httplib::Request& req, httplib::Response& res) {
               auto s = wb.session(req.matches[1]);
               auto rounds = Json::array();
               for (std::size_t i = 0; i < s.rounds.size(); ++i)
                 rounds.push_back(round_to_json(s.rounds[i], i, s.options.widths));
               reply(res, 200, Json{{"session", s.id}, {"grammar", s.grammar->text}, {"rounds", std::move(rounds)}});
             }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) return;
    reply(res, res.status, WorkbenchError(res.status == 404 ? "not_found" : "bad_request",
                                          res.status == 404 ? "no such endpoint" : "request failed")
                               .to_json());
  });
}

bool serve(Workbench& wb, const std::string& host, int port) {
  httplib::Server server;
  install_routes(server, wb);
  std::cerr << "layit: listening on http://" << host << ":" << port << '\n';
  return server.listen(host, port);
}

}  // namespace layit
