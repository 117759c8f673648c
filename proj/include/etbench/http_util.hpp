#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include <httplib.h>

namespace etbench::http {

/// "scheme://host[:port]" plus the path prefix that follows it.
struct Endpoint {
  std::string origin;
  std::string path; // no trailing slash; empty for root
};

inline Endpoint split_url(const std::string &url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw std::invalid_argument("URL needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  Endpoint ep;
  ep.origin = url.substr(0, path_start);
  if (path_start != std::string::npos) ep.path = url.substr(path_start);
  while (!ep.path.empty() && ep.path.back() == '/') ep.path.pop_back();
  return ep;
}

inline std::unique_ptr<httplib::Client> make_client(const Endpoint &ep,
                                                    double timeout_seconds) {
  auto cli = std::make_unique<httplib::Client>(ep.origin);
  const auto sec = static_cast<time_t>(timeout_seconds);
  const auto usec = static_cast<time_t>((timeout_seconds - static_cast<double>(sec)) * 1e6);
  cli->set_connection_timeout(sec, usec);
  cli->set_read_timeout(sec, usec);
  cli->set_write_timeout(sec, usec);
  return cli;
}

} // namespace etbench::http
