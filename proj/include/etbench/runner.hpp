#pragma once

// Batch client for chat-completions style endpoints. Responses are appended
// to a JSON-lines file as they finish; rerunning against the same file skips
// every sample that already has a record.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "domain.hpp"
#include "http_util.hpp"
#include "manifest.hpp"

namespace etbench {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char *kDefaultDurationHint =
    "The following {n} frames are uniformly sampled from a {duration}-second video. ";

struct EndpointConfig {
  std::string base_url;            // e.g. http://host:port/v1
  std::string model;
  std::string api_key_env;         // empty: no Authorization header
  double temperature = 0.0;
  int max_tokens = 512;
  double timeout_seconds = 60.0;
  std::size_t max_in_flight = 4;
  int max_retries = 3;
  double backoff_base_seconds = 1.0;
  std::size_t frames_per_sample = 8;
  bool duration_hint = false;      // prepend a frame-count/duration sentence
  std::string duration_hint_text = kDefaultDurationHint;

  void check() const {
    if (base_url.empty()) throw ConfigError("endpoint: base_url is required");
    if (max_in_flight < 1) throw ConfigError("endpoint: max_in_flight must be >= 1");
    if (!(timeout_seconds > 0.0)) throw ConfigError("endpoint: timeout must be > 0");
    if (max_retries < 0) throw ConfigError("endpoint: retries must be >= 0");
    if (backoff_base_seconds < 0.0) throw ConfigError("endpoint: backoff must be >= 0");
    if (frames_per_sample < 1) throw ConfigError("endpoint: frames_per_sample must be >= 1");
  }
};

inline EndpointConfig endpoint_config_from_json(const nlohmann::json &j) {
  EndpointConfig c;
  try {
    c.base_url = j.at("base_url").get<std::string>();
    c.model = j.value("model", "");
    c.api_key_env = j.value("api_key_env", "");
    c.temperature = j.value("temperature", c.temperature);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.timeout_seconds = j.value("timeout_seconds", c.timeout_seconds);
    c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
    c.max_retries = j.value("max_retries", c.max_retries);
    c.backoff_base_seconds = j.value("backoff_base_seconds", c.backoff_base_seconds);
    c.frames_per_sample = j.value("frames_per_sample", c.frames_per_sample);
    c.duration_hint = j.value("duration_hint", c.duration_hint);
    c.duration_hint_text = j.value("duration_hint_text", c.duration_hint_text);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("endpoint config: ") + e.what());
  }
  c.check();
  return c;
}

struct ResponseRecord {
  std::string sample_id;
  std::string raw_text;
  std::string model;
  double latency_ms = 0.0;
  int attempts = 0;
  std::optional<std::string> error;
};

inline nlohmann::json to_json(const ResponseRecord &r) {
  nlohmann::json j = {{"sample_id", r.sample_id}, {"raw_text", r.raw_text},
                      {"model", r.model},         {"latency_ms", r.latency_ms},
                      {"attempts", r.attempts}};
  j["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
  return j;
}

inline ResponseRecord response_record_from_json(const nlohmann::json &j) {
  try {
    ResponseRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.raw_text = j.value("raw_text", "");
    r.model = j.value("model", "");
    r.latency_ms = j.value("latency_ms", 0.0);
    r.attempts = j.value("attempts", 0);
    if (j.contains("error") && !j["error"].is_null()) r.error = j["error"].get<std::string>();
    return r;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed response record: ") + e.what());
  }
}

inline std::vector<ResponseRecord> read_responses(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open responses: " + path);
  std::vector<ResponseRecord> out;
  for_each_json_line(in, [&](const nlohmann::json &j, std::size_t) {
    out.push_back(response_record_from_json(j));
  });
  return out;
}

/// Centre-of-bin frame picks, duplicates removed in order.
inline std::vector<std::size_t> select_frame_indices(std::size_t n_available,
                                                     std::size_t n_wanted = 8) {
  if (n_available < 1 || n_wanted < 1)
    throw std::invalid_argument("select_frame_indices: counts must be >= 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_wanted; ++i) {
    const auto idx = static_cast<std::size_t>(
        std::floor((static_cast<double>(i) + 0.5) * static_cast<double>(n_available) /
                   static_cast<double>(n_wanted)));
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

inline std::string base64_encode(std::string_view bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char *>(out.data()),
                                reinterpret_cast<const unsigned char *>(bytes.data()),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

/// Sorted `frame_*.jpg` files under media_dir/<sample_id>, or empty.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path &media_dir,
                                                      const std::string &sample_id) {
  namespace fs = std::filesystem;
  std::vector<fs::path> out;
  const fs::path dir = media_dir / sample_id;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return out;
  for (const auto &e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("frame_", 0) == 0 && e.path().extension() == ".jpg")
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string read_file_bytes(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string duration_hint_text(const std::string &tpl, std::size_t n, double duration) {
  char dur[32];
  std::snprintf(dur, sizeof dur, "%.1f", duration);
  std::string out = tpl;
  auto sub = [&](const std::string &key, const std::string &val) {
    for (std::size_t p; (p = out.find(key)) != std::string::npos;) out.replace(p, key.size(), val);
  };
  sub("{n}", std::to_string(n));
  sub("{duration}", dur);
  return out;
}

/// Chat-completions request body; images become base64 data-URL parts.
inline nlohmann::json build_chat_request(const EndpointConfig &cfg, const Sample &sample,
                                         const std::vector<std::string> &jpeg_frames) {
  std::string text = sample.instruction;
  if (cfg.duration_hint && !jpeg_frames.empty())
    text = duration_hint_text(cfg.duration_hint_text, jpeg_frames.size(), sample.duration) + text;
  nlohmann::json content;
  if (jpeg_frames.empty()) {
    content = text;
  } else {
    content = nlohmann::json::array();
    for (const auto &f : jpeg_frames)
      content.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:image/jpeg;base64," + base64_encode(f)}}}});
    content.push_back({{"type", "text"}, {"text", text}});
  }
  return {{"model", cfg.model},
          {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})},
          {"temperature", cfg.temperature},
          {"max_tokens", cfg.max_tokens}};
}

struct RunSummary {
  std::size_t completed = 0;
  std::size_t failed = 0;
  std::size_t skipped = 0;
  friend bool operator==(const RunSummary &, const RunSummary &) = default;
};

struct RunOptions {
  std::optional<std::filesystem::path> media_dir;
  /// Polled before each request; returning true stops issuing new work.
  std::function<bool()> should_abort;
  /// Replaces real sleeping between retries (tests).
  std::function<void(double seconds)> sleep;
};

namespace detail {

/// Reads ids already persisted. A final line without a trailing newline that
/// does not parse is the remnant of an interrupted write and is cut off;
/// malformed lines anywhere else are an error.
inline std::set<std::string> load_existing_ids(const std::filesystem::path &path) {
  namespace fs = std::filesystem;
  std::set<std::string> ids;
  std::error_code ec;
  if (!fs::exists(path, ec)) return ids;
  const std::string data = read_file_bytes(path);
  std::size_t pos = 0, lineno = 0;
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    const bool last = nl == std::string::npos;
    const std::string line = data.substr(pos, last ? std::string::npos : nl - pos);
    ++lineno;
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error &) {
        if (!last)
          throw FormatError(path.string() + " line " + std::to_string(lineno) + ": malformed");
        fs::resize_file(path, pos);
        return ids;
      }
      ids.insert(response_record_from_json(j).sample_id);
    }
    if (last) {
      // complete record without newline: terminate it before appending
      std::ofstream(path, std::ios::app) << '\n';
      break;
    }
    pos = nl + 1;
  }
  return ids;
}

inline bool retryable(int status) { return status == 429 || status >= 500; }

} // namespace detail

/// Checks that something answers at the endpoint's origin.
inline void preflight(const EndpointConfig &cfg) {
  const auto ep = http::split_url(cfg.base_url);
  auto cli = http::make_client(ep, std::min(cfg.timeout_seconds, 10.0));
  auto res = cli->Get(ep.path + "/models");
  if (!res)
    throw ConfigError("endpoint unreachable: " + cfg.base_url + " (" +
                      httplib::to_string(res.error()) + ")");
}

inline RunSummary run_batch(const std::vector<Sample> &manifest, const EndpointConfig &cfg,
                            const std::filesystem::path &out_path, const RunOptions &opts = {}) {
  cfg.check();
  RunSummary summary;
  const auto done = detail::load_existing_ids(out_path);
  std::vector<const Sample *> pending;
  for (const auto &s : manifest) {
    if (done.count(s.id))
      ++summary.skipped;
    else
      pending.push_back(&s);
  }
  if (pending.empty()) return summary;

  std::optional<std::string> auth;
  if (!cfg.api_key_env.empty()) {
    const char *key = std::getenv(cfg.api_key_env.c_str());
    if (!key || !*key) throw ConfigError("environment variable " + cfg.api_key_env + " is not set");
    auth = std::string("Bearer ") + key;
  }
  preflight(cfg);

  std::ofstream out(out_path, std::ios::app);
  if (!out) throw ConfigError("cannot open " + out_path.string() + " for appending");
  std::mutex out_mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> stop{false};
  const auto ep = http::split_url(cfg.base_url);

  auto sleep_for = [&](double s) {
    if (opts.sleep)
      opts.sleep(s);
    else
      std::this_thread::sleep_for(std::chrono::duration<double>(s));
  };

  auto process = [&](httplib::Client &cli, const Sample &s) {
    ResponseRecord rec{s.id, "", cfg.model, 0.0, 0, std::nullopt};
    std::vector<std::string> frames;
    try {
      if (opts.media_dir) {
        const auto files = list_frames(*opts.media_dir, s.id);
        if (!files.empty())
          for (auto i : select_frame_indices(files.size(), cfg.frames_per_sample))
            frames.push_back(read_file_bytes(files[i]));
      }
    } catch (const std::exception &e) {
      rec.error = std::string("media: ") + e.what();
      return rec;
    }
    const std::string body = build_chat_request(cfg, s, frames).dump();
    httplib::Headers headers;
    if (auth) headers.emplace("Authorization", *auth);
    const auto t0 = std::chrono::steady_clock::now();
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      if (attempt > 0) sleep_for(cfg.backoff_base_seconds * std::pow(2.0, attempt - 1));
      rec.attempts = attempt + 1;
      auto res = cli.Post(ep.path + "/chat/completions", headers, body, "application/json");
      if (!res) {
        rec.error = "connection: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        rec.error = "HTTP " + std::to_string(res->status);
        if (detail::retryable(res->status)) continue;
        break;
      }
      try {
        const auto j = nlohmann::json::parse(res->body);
        rec.raw_text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        rec.error.reset();
      } catch (const nlohmann::json::exception &e) {
        rec.error = std::string("malformed response: ") + e.what();
      }
      break;
    }
    rec.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
  };

  auto worker = [&] {
    auto cli = http::make_client(ep, cfg.timeout_seconds);
    for (;;) {
      if (stop.load()) return;
      if (opts.should_abort) {
        std::lock_guard lk(out_mu);
        if (opts.should_abort()) {
          stop = true;
          return;
        }
      }
      const std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const ResponseRecord rec = process(*cli, *pending[i]);
      std::lock_guard lk(out_mu);
      out << to_json(rec).dump() << '\n';
      out.flush();
      if (rec.error)
        ++summary.failed;
      else
        ++summary.completed;
    }
  };

  const std::size_t nthreads = std::min(cfg.max_in_flight, pending.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 0; i < nthreads; ++i) pool.emplace_back(worker);
  for (auto &t : pool) t.join();
  return summary;
}

} // namespace etbench
