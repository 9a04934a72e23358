#include <httplib.h>

#include <random>

#include "stayinsight/error.hpp"
#include "stayinsight/service.hpp"

namespace stayinsight {

using nlohmann::json;

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedUrl:
    case ErrorCode::UnsupportedHost:
    case ErrorCode::EmptyQuestion:
    case ErrorCode::EmptyQuery:
    case ErrorCode::InvalidArgument:
    case ErrorCode::UnknownProvider:
    case ErrorCode::UnknownModel:
    case ErrorCode::SchemaMismatch: return 400;
    case ErrorCode::NotFound:
    case ErrorCode::NoReviewsFound: return 404;
    case ErrorCode::NotReady: return 409;
    case ErrorCode::RateLimited: return 429;
    case ErrorCode::ProviderError:
    case ErrorCode::LayoutNotRecognized:
    case ErrorCode::Timeout:
    case ErrorCode::NetworkFailure:
    case ErrorCode::ContextOverflow:
    case ErrorCode::TokenRequestTooLarge:
    case ErrorCode::BudgetTooSmall: return 502;
    case ErrorCode::ProviderDisabled:
    case ErrorCode::ProviderQuotaExceeded: return 503;
    default: return 500;
  }
}

json error_body(const Error& e) {
  json err = {{"code", to_string(e.code())}, {"message", e.what()}, {"retriable", e.retriable()}};
  if (e.upstream_status() != 0) err["upstream_status"] = e.upstream_status();
  return json{{"error", err}};
}

namespace {

constexpr const char* kJson = "application/json; charset=utf-8";

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html lang="en"><head><meta charset="utf-8"><title>stayinsight</title></head>
<body><h1>stayinsight</h1>
<p>The web UI bundle is not installed. Point <code>static_dir</code> at a built bundle, or use the API under
<code>/api/</code>.</p></body></html>
)";

class RequestIds {
 public:
  RequestIds() : rng_(std::random_device{}()) {}
  std::string next() {
    std::lock_guard lock(mutex_);
    char buf[24];
    std::snprintf(buf, sizeof buf, "req-%016llx", static_cast<unsigned long long>(rng_()));
    return buf;
  }

 private:
  std::mutex mutex_;
  std::mt19937_64 rng_;
};

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("request body is not JSON: ") + e.what());
  }
}

std::optional<std::string> opt_string(const json& body, const char* key) {
  if (!body.contains(key) || body[key].is_null()) return std::nullopt;
  if (!body[key].is_string()) throw Error(ErrorCode::InvalidArgument, std::string(key) + " must be a string");
  return body[key].get<std::string>();
}

std::optional<std::string> opt_param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  std::string v = req.get_param_value(key);
  if (v.empty()) return std::nullopt;
  return v;
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    send_json(res, http_status_for(e.code()), error_body(e));
  } catch (const std::exception& e) {
    send_json(res, 500, error_body(Error(ErrorCode::Io, e.what())));
  }
}

}  // namespace

struct HttpService::Impl {
  httplib::Server server;
  RequestIds ids;
};

HttpService::HttpService(ReviewService& service, std::shared_ptr<AuditLog> http_log)
    : impl_(std::make_unique<Impl>()), http_log_(http_log ? std::move(http_log) : std::make_shared<AuditLog>()) {
  auto& srv = impl_->server;
  ReviewService* svc = &service;

  srv.Post("/api/listings", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto url = opt_string(body, "url");
      if (!url) throw Error(ErrorCode::MalformedUrl, "body needs a 'url' field");
      const SubmitResult r = svc->submit_listing(*url, opt_string(body, "provider"));
      send_json(res, 202,
                json{{"job_id", r.job.job_id}, {"listing_id", r.job.listing_id}, {"state", to_string(r.job.state)},
                     {"created", r.created}});
    });
  });

  srv.Get(R"(/api/jobs/([^/]+))", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, svc->job(req.matches[1]).to_json()); });
  });

  srv.Get(R"(/api/listings/([^/]+)/summary)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const InsightResult r = svc->summary(req.matches[1], opt_param(req, "lang"), opt_param(req, "model"));
      send_json(res, 200, r.to_json());
    });
  });

  srv.Post(R"(/api/listings/([^/]+)/query)", [svc](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const std::string question = opt_string(body, "question").value_or("");
      const InsightResult r =
          svc->query(req.matches[1], question, opt_string(body, "lang"), opt_string(body, "model"));
      send_json(res, 200, r.to_json());
    });
  });

  srv.Get("/api/models", [svc](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { send_json(res, 200, svc->models()); });
  });

  const auto& static_dir = service.config().static_dir;
  if (static_dir && std::filesystem::is_directory(*static_dir)) {
    srv.set_mount_point("/", static_dir->string());
  } else {
    srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
    });
  }

  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    if (res.status == 404) {
      send_json(res, 404, error_body(Error(ErrorCode::NotFound, "no route for " + req.method + " " + req.path)));
      return httplib::Server::HandlerResponse::Handled;
    }
    return httplib::Server::HandlerResponse::Unhandled;
  });

  srv.set_post_routing_handler([this](const httplib::Request& req, httplib::Response& res) {
    std::string id = req.get_header_value("X-Request-Id");
    if (id.empty() || id.size() > 128) id = impl_->ids.next();
    res.set_header("X-Request-Id", id);
  });

  srv.set_logger([this, svc](const httplib::Request& req, const httplib::Response& res) {
    http_log_->append(json{{"ts", format_timestamp(svc->gateway().clock().now())},
                           {"request_id", res.get_header_value("X-Request-Id")},
                           {"method", req.method},
                           {"path", req.path},
                           {"status", res.status}});
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::start(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (port == 0) {
    port_ = srv.bind_to_any_port(host);
  } else {
    port_ = srv.bind_to_port(host, port) ? port : -1;
  }
  if (port_ < 0) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return port_;
}

void HttpService::run(const std::string& host, int port) {
  auto& srv = impl_->server;
  if (!srv.bind_to_port(host, port)) throw Error(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  port_ = port;
  srv.listen_after_bind();
}

void HttpService::stop() {
  if (impl_) impl_->server.stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace stayinsight
