#pragma once

#include <string>

#include <nlohmann/json.hpp>

namespace asag::detail {

// POSTs a JSON body to {base_url}{path} with bearer auth. Retries
// transport failures and 429/5xx with exponential backoff; 401/403 throw
// AuthError immediately. Returns the parsed response body.
nlohmann::json post_json_with_retry(const std::string& base_url,
                                    const std::string& path,
                                    const std::string& api_key,
                                    const nlohmann::json& body,
                                    int timeout_seconds, int max_attempts);

}  // namespace asag::detail
