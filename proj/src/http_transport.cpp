// Copyright 2026 The ctiqa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ctiqa/http_transport.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>

namespace ctiqa {

Transport make_httplib_transport() {
  return [](const std::string& url, const std::string& bearer,
            const std::string& body, double timeout_s) -> HttpResult {
    HttpResult result;

    // Split {scheme://host[:port]}{/path}.
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
      result.network_error = true;
      result.error = "malformed URL: " + url;
      return result;
    }
    std::size_t path_start = url.find('/', scheme_end + 3);
    std::string base = path_start == std::string::npos ? url : url.substr(0, path_start);
    std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(base);
    auto seconds = std::chrono::duration<double>(timeout_s);
    client.set_connection_timeout(
        std::chrono::duration_cast<std::chrono::milliseconds>(seconds));
    client.set_read_timeout(
        std::chrono::duration_cast<std::chrono::milliseconds>(seconds));
    client.set_write_timeout(
        std::chrono::duration_cast<std::chrono::milliseconds>(seconds));

    httplib::Headers headers{{"Authorization", "Bearer " + bearer}};
    auto response = client.Post(path, headers, body, "application/json");
    if (!response) {
      result.network_error = true;
      result.timed_out = response.error() == httplib::Error::ConnectionTimeout ||
                         response.error() == httplib::Error::Read;
      result.error = httplib::to_string(response.error());
      return result;
    }
    result.status = response->status;
    result.body = response->body;
    return result;
  };
}

}  // namespace ctiqa
