#include <utility>

#include "httplib.h"
#include "specrank/embed_service.hpp"
#include "specrank/error.hpp"

namespace specrank {

namespace {

class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string base, std::string path, std::optional<std::string> token,
                std::chrono::seconds timeout)
      : base_(std::move(base)), path_(std::move(path)), token_(std::move(token)), timeout_(timeout) {}

  std::string post(const std::string& body) override {
    httplib::Client client(base_);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    if (token_) headers.emplace("Authorization", "Bearer " + *token_);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      throw TransportError("POST " + base_ + path_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("POST " + base_ + path_ + " returned HTTP " + std::to_string(res->status));
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorKind::ProtocolError,
                  "POST " + base_ + path_ + " returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }

 private:
  std::string base_;
  std::string path_;
  std::optional<std::string> token_;
  std::chrono::seconds timeout_;
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const std::string& url,
                                               std::optional<std::string> bearer_token,
                                               std::chrono::seconds timeout) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorKind::ValidationError, "endpoint '" + url + "' needs a scheme (http://...)");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return std::make_unique<HttpTransport>(std::move(base), std::move(path), std::move(bearer_token),
                                         timeout);
}

}  // namespace specrank
