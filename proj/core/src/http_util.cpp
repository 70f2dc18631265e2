#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <thread>

#include "asag/errors.hpp"
#include "http_util.hpp"

namespace asag::detail {

namespace {

// Splits "https://host[:port]/v1" into the client root and a path prefix.
void split_base_url(const std::string& base_url, std::string& root,
                    std::string& prefix) {
  auto scheme_end = base_url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto slash = base_url.find('/', host_start);
  if (slash == std::string::npos) {
    root = base_url;
    prefix.clear();
  } else {
    root = base_url.substr(0, slash);
    prefix = base_url.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  }
}

}  // namespace

nlohmann::json post_json_with_retry(const std::string& base_url,
                                    const std::string& path,
                                    const std::string& api_key,
                                    const nlohmann::json& body,
                                    int timeout_seconds, int max_attempts) {
  std::string root, prefix;
  split_base_url(base_url, root, prefix);

  httplib::Client client(root);
  client.set_connection_timeout(timeout_seconds);
  client.set_read_timeout(timeout_seconds);
  client.set_write_timeout(timeout_seconds);
  client.set_bearer_token_auth(api_key);

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    auto res = client.Post(prefix + path, payload, "application/json");
    if (res) {
      if (res->status == 401 || res->status == 403) {
        throw AuthError("backend rejected credentials (HTTP " +
                        std::to_string(res->status) + ")");
      }
      if (res->status >= 200 && res->status < 300) {
        try {
          return nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::parse_error& e) {
          throw TransportError(std::string("backend returned invalid JSON: ") +
                               e.what());
        }
      }
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status != 429 && res->status < 500) {
        throw TransportError("backend request failed: " + last_error + ": " +
                             res->body);
      }
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < max_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(250) * (1 << (attempt - 1)));
    }
  }
  throw TransportError("backend request failed after " +
                       std::to_string(max_attempts) + " attempts: " + last_error);
}

}  // namespace asag::detail
