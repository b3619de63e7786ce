// SPDX-License-Identifier: Apache-2.0

#include "crag/http_client.hpp"

#include <cstdlib>

#include <httplib.h>

#include "crag/errors.hpp"
#include "crag/retry.hpp"

namespace crag {
namespace {

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint '" + url + "' is not an absolute http(s) URL");
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("endpoint '" + url + "' uses unsupported scheme '" + scheme + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        return {url, "/"};
    }
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout) {
    const SplitUrl target = split_url(url);
    httplib::Client client(target.origin);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(timeout - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());

    httplib::Headers request_headers;
    for (const auto& [name, value] : headers) {
        request_headers.emplace(name, value);
    }
    auto result = client.Post(target.path, request_headers, body, "application/json");
    if (!result) {
        throw TransientError("POST " + url + ": " + httplib::to_string(result.error()));
    }
    if (result->status == 429 || result->status >= 500) {
        throw TransientError("POST " + url + ": HTTP " + std::to_string(result->status));
    }
    return {result->status, result->body};
}

std::string env_or_empty(const std::string& name) {
    if (name.empty()) {
        return {};
    }
    const char* value = std::getenv(name.c_str());
    return value == nullptr ? std::string{} : std::string{value};
}

}  // namespace crag
