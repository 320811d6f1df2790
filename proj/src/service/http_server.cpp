#include "trackanno/service/http_server.hpp"

#include <httplib.h>

#include <json.hpp>

#include "trackanno/core/error.hpp"

namespace trackanno::service {

using json = nlohmann::ordered_json;

namespace {

json to_json(const SessionDescriptor& d) {
  return {{"session_id", d.session_id}, {"iteration", d.iteration}, {"videos", d.videos},
          {"queued", d.queued},         {"empty", d.empty}};
}

json to_json(const DecisionSummary& s) {
  return {{"tracklet_key", s.tracklet_key},
          {"accepted", s.accepted},
          {"rejected", s.rejected},
          {"suppressed", s.suppressed},
          {"click_count", s.click_count}};
}

json to_json(const Progress& p) {
  return {{"session_id", p.session_id}, {"done", p.done},           {"total", p.total},
          {"clicks", p.clicks},         {"annotated", p.annotated}, {"closed", p.closed}};
}

json to_json(const review::ReviewSample& s) {
  json reasons = json::array();
  for (auto r : s.reasons) reasons.push_back(review::to_string(r));
  return {{"sample_id", s.sample_id},
          {"tracklet_key", s.tracklet_key},
          {"instance_index", s.instance_index},
          {"frame_index", s.frame_index},
          {"box", {{"x", s.box.x}, {"y", s.box.y}, {"w", s.box.w}, {"h", s.box.h}}},
          {"reasons", reasons},
          {"crop_ref", s.crop_ref},
          {"crop_url", "/crops/" + s.sample_id}};
}

json to_json(const NextTracklet& n, const std::string& session_id) {
  json j = {{"session_id", session_id}, {"done", n.done}, {"n", n.n}};
  if (n.done) return j;
  j["tracklet"] = {{"tracklet_key", n.tracklet.tracklet_key}, {"video_id", n.tracklet.video_id},
                   {"birth_frame", n.tracklet.birth_frame},   {"death_frame", n.tracklet.death_frame},
                   {"length", n.tracklet.length},             {"measured", n.tracklet.measured},
                   {"suppressed", n.tracklet.suppressed}};
  json samples = json::array();
  for (const auto& s : n.samples) samples.push_back(to_json(s));
  j["samples"] = samples;
  return j;
}

void reply(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void error(httplib::Response& res, int status, const char* kind, const std::string& msg) {
  reply(res, status, {{"error", kind}, {"message", msg}});
}

json body_of(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed JSON body: ") + e.what());
  }
}

template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ReplayConflict& e) {
      reply(res, 409, {{"error", "conflict"}, {"message", e.what()}, {"prior", to_json(e.prior())}});
    } catch (const NotFound& e) {
      error(res, 404, "not-found", e.what());
    } catch (const ConflictError& e) {
      error(res, 409, "conflict", e.what());
    } catch (const IncompleteReview& e) {
      error(res, 422, "incomplete-review", e.what());
    } catch (const InvalidArgument& e) {
      error(res, 400, "invalid-argument", e.what());
    } catch (const json::exception& e) {
      error(res, 400, "invalid-argument", e.what());
    } catch (const std::exception& e) {
      error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

struct HttpReviewServer::Impl {
  ReviewService& svc;
  httplib::Server server;
  std::thread thread;

  explicit Impl(ReviewService& s) : svc(s) {
    server.Post("/sessions", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  json b = body_of(req);
                  int iteration = b.value("iteration", svc.iteration());
                  std::vector<std::string> videos = b.value("videos", std::vector<std::string>{});
                  reply(res, 200, to_json(svc.create_session(iteration, videos)));
                }));
    server.Get(R"(/sessions/([^/]+)/next)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 std::string id = req.matches[1];
                 reply(res, 200, to_json(svc.next_tracklet(id), id));
               }));
    server.Post(R"(/sessions/([^/]+)/decisions)",
                guarded([this](const httplib::Request& req, httplib::Response& res) {
                  json b = body_of(req);
                  if (!b.contains("tracklet_key") || !b.contains("clicks")) {
                    throw InvalidArgument("body needs tracklet_key and clicks");
                  }
                  review::ClickSequence clicks;
                  for (const auto& c : b.at("clicks")) {
                    clicks.push_back({c.at("sample_id").get<std::string>(),
                                      parse_decision(c.at("decision").get<std::string>())});
                  }
                  reply(res, 200, to_json(svc.post_decisions(req.matches[1], b.at("tracklet_key"), clicks)));
                }));
    server.Get(R"(/sessions/([^/]+)/progress)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 reply(res, 200, to_json(svc.progress(req.matches[1])));
               }));
    server.Post(R"(/sessions/([^/]+)/close)", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  reply(res, 200, to_json(svc.close(req.matches[1])));
                }));
    server.Get(R"(/crops/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 auto bytes = svc.get_crop(req.matches[1]);
                 res.status = 200;
                 res.set_header("Cache-Control", "public, max-age=31536000, immutable");
                 res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
               }));
    server.Get("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
                 json out = json::array();
                 for (const auto& d : svc.sessions()) out.push_back(to_json(d));
                 reply(res, 200, {{"iteration", svc.iteration()}, {"n", svc.n()}, {"sessions", out}});
               }));
  }
};

HttpReviewServer::HttpReviewServer(ReviewService& svc) : impl_(std::make_unique<Impl>(svc)) {}

HttpReviewServer::~HttpReviewServer() { stop(); }

int HttpReviewServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int p = impl_->server.bind_to_any_port(host);
    if (p < 0) throw Error("cannot bind " + host);
    return p;
  }
  if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpReviewServer::start() {
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpReviewServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

ReviewDriver interactive_operator(std::string host, int port, std::ostream& log) {
  return [host, port, &log](ReviewService& svc) {
    HttpReviewServer server(svc);
    int bound = server.bind(host, port);
    server.start();
    log << "review service for iteration " << svc.iteration() << " listening on http://" << host << ":" << bound
        << "\n"
        << std::flush;
    svc.wait_finished();
    server.stop();
  };
}

}  // namespace trackanno::service
