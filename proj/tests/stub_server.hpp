#pragma once

#include <string>
#include <thread>

#include <httplib.h>

// Local HTTP server on an ephemeral port, stopped on destruction.
class StubServer {
public:
  httplib::Server srv;

  void start() {
    port_ = srv.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { srv.listen_after_bind(); });
    srv.wait_until_ready();
  }
  ~StubServer() {
    srv.stop();
    if (thread_.joinable()) thread_.join();
  }
  int port() const { return port_; }
  std::string url(const std::string &path = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + path;
  }

private:
  int port_ = 0;
  std::thread thread_;
};
