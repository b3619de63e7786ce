// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace crag {

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// POSTs a JSON body to an absolute http(s) URL. Connection failures, timeouts,
/// 429 and 5xx raise TransientError; other statuses are returned to the caller.
HttpResponse post_json(const std::string& url, const std::string& body,
                       const std::vector<std::pair<std::string, std::string>>& headers,
                       std::chrono::milliseconds timeout);

/// Value of the environment variable `name`, or empty when unset or `name` is empty.
std::string env_or_empty(const std::string& name);

}  // namespace crag
