#pragma once

// Client for the sentence-embedding sidecar.
//   POST {base}/embed  {"texts": [...]}  ->  {"dim": n, "embeddings": [[...], ...]}

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "http_util.hpp"
#include "simscore.hpp"

namespace etbench {

class RemoteEmbedder final : public Embedder {
public:
  struct Options {
    std::size_t batch_size = 256;
    std::size_t max_in_flight = 4;
    double timeout_seconds = 30.0;
    std::size_t expected_dim = 384;
  };

  explicit RemoteEmbedder(std::string base_url) : RemoteEmbedder(std::move(base_url), Options{}) {}
  RemoteEmbedder(std::string base_url, Options opts)
      : endpoint_(http::split_url(base_url)), opts_(opts) {
    if (opts_.batch_size == 0 || opts_.max_in_flight == 0)
      throw std::invalid_argument("RemoteEmbedder: batch size and in-flight limit must be >= 1");
  }

  std::size_t dim() const override { return opts_.expected_dim; }
  bool deterministic() const override { return false; }

  /// Chunks the request; chunks are sent concurrently and reassembled in order.
  std::vector<Embedding> embed(const std::vector<std::string> &texts) override {
    std::vector<Embedding> out(texts.size());
    if (texts.empty()) return out;
    const std::size_t nchunks = (texts.size() + opts_.batch_size - 1) / opts_.batch_size;
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::string error;

    auto worker = [&] {
      auto cli = http::make_client(endpoint_, opts_.timeout_seconds);
      for (;;) {
        const std::size_t c = next.fetch_add(1);
        if (c >= nchunks) return;
        {
          std::lock_guard lk(err_mu);
          if (!error.empty()) return;
        }
        const std::size_t lo = c * opts_.batch_size;
        const std::size_t hi = std::min(texts.size(), lo + opts_.batch_size);
        try {
          auto vecs = request(*cli, std::vector<std::string>(texts.begin() + lo, texts.begin() + hi));
          for (std::size_t i = lo; i < hi; ++i) out[i] = std::move(vecs[i - lo]);
        } catch (const std::exception &e) {
          std::lock_guard lk(err_mu);
          if (error.empty()) error = e.what();
          return;
        }
      }
    };

    const std::size_t nthreads = std::min(opts_.max_in_flight, nchunks);
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i + 1 < nthreads; ++i) pool.emplace_back(worker);
    worker();
    for (auto &t : pool) t.join();
    if (!error.empty()) throw EmbedderUnavailable(error);
    return out;
  }

private:
  std::vector<Embedding> request(httplib::Client &cli, const std::vector<std::string> &texts) {
    const nlohmann::json body = {{"texts", texts}};
    auto res = cli.Post(endpoint_.path + "/embed", body.dump(), "application/json");
    if (!res)
      throw EmbedderUnavailable("embedder unreachable at " + endpoint_.origin + ": " +
                                httplib::to_string(res.error()));
    if (res->status != 200)
      throw EmbedderUnavailable("embedder returned HTTP " + std::to_string(res->status));
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception &e) {
      throw EmbedderUnavailable(std::string("embedder sent malformed JSON: ") + e.what());
    }
    const auto &embs = j.value("embeddings", nlohmann::json::array());
    const auto dim = j.value("dim", std::size_t{0});
    if (embs.size() != texts.size())
      throw EmbedderUnavailable("embedder returned the wrong number of vectors");
    std::vector<Embedding> out;
    out.reserve(embs.size());
    for (const auto &e : embs) {
      auto v = e.get<Embedding>();
      if (v.size() != dim || dim != opts_.expected_dim)
        throw EmbedderUnavailable("embedder vector dimension " + std::to_string(v.size()) +
                                  " != " + std::to_string(opts_.expected_dim));
      out.push_back(std::move(v));
    }
    return out;
  }

  http::Endpoint endpoint_;
  Options opts_;
};

} // namespace etbench
