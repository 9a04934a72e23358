#include <httplib.h>

#include "stayinsight/backends.hpp"

namespace stayinsight {

namespace {

void apply_timeout(httplib::Client& client, Duration timeout) {
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
}

HttpReply finish(const httplib::Result& result) {
  if (!result) {
    const auto err = result.error();
    if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout) {
      throw Error(ErrorCode::Timeout, "HTTP request timed out: " + httplib::to_string(err), true);
    }
    throw Error(ErrorCode::NetworkFailure, "HTTP request failed: " + httplib::to_string(err), true);
  }
  return HttpReply{result->status, result->body};
}

class HttplibTransport final : public HttpTransport {
 public:
  HttpReply post(const HttpCall& call, Duration timeout) override {
    httplib::Client client("https://" + call.host + ":" + std::to_string(call.port));
    apply_timeout(client, timeout);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : call.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    return finish(client.Post(call.path, headers, call.body, content_type));
  }

  HttpReply get(const std::string& url, Duration timeout) override {
    const auto scheme_end = url.find("://");
    const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    apply_timeout(client, timeout);
    client.set_follow_location(true);
    return finish(client.Get(path));
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_https_transport() { return std::make_shared<HttplibTransport>(); }

}  // namespace stayinsight
