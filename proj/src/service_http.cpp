#include <httplib.h>

#include <thread>

#include "dsiqa/error.hpp"
#include "dsiqa/service.hpp"

namespace dsiqa {

namespace {

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>Image comparison study</title></head>"
    "<body><p>The study API is available under /api. No UI assets were mounted.</p></body></html>";

void send(httplib::Response& res, const ApiResponse& api) {
  res.status = api.status;
  res.set_content(api.body, api.content_type.c_str());
  res.set_header("Cache-Control", "no-store");
}

}  // namespace

struct HttpServer::Impl {
  std::shared_ptr<StudyService> service;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(std::shared_ptr<StudyService> service, std::optional<std::filesystem::path> static_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = std::move(service);
  auto& srv = impl_->server;
  StudyService* svc = impl_->service.get();

  srv.Post("/api/sessions", [svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc->create_session(req.body));
  });
  srv.Get(R"(/api/sessions/([^/]+)/next)", [svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc->next_pair(req.matches[1]));
  });
  srv.Post(R"(/api/sessions/([^/]+)/votes)", [svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc->submit_vote(req.matches[1], req.body));
  });
  srv.Get(R"(/api/images/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
    send(res, svc->image(req.matches[1]));
  });
  srv.Get("/api/progress", [svc](const httplib::Request&, httplib::Response& res) { send(res, svc->progress()); });

  if (static_dir) {
    if (!srv.set_mount_point("/", static_dir->string())) {
      fail(ErrorKind::Input, static_dir->string() + ": static asset directory does not exist");
    }
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kPlaceholderPage, "text/html"); });
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  int bound = port;
  if (port == 0) {
    bound = srv.bind_to_any_port(host);
  } else if (!srv.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound <= 0) fail(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace dsiqa
