#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "domain.hpp"
#include "metrics.hpp"

namespace etbench {

using Embedding = std::vector<double>;

class EmbedderUnavailable : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Maps texts to unit-norm vectors of a fixed dimension (zero vector allowed
/// for empty text).
class Embedder {
public:
  virtual ~Embedder() = default;
  virtual std::vector<Embedding> embed(const std::vector<std::string> &texts) = 0;
  virtual std::size_t dim() const = 0;
  virtual bool deterministic() const = 0;
};

/// Bag of hashed lowercase word tokens, L2-normalized.
class HashEmbedder final : public Embedder {
public:
  static constexpr std::size_t kDim = 384;

  std::vector<Embedding> embed(const std::vector<std::string> &texts) override {
    std::vector<Embedding> out;
    out.reserve(texts.size());
    for (const auto &t : texts) out.push_back(embed_one(t));
    return out;
  }
  std::size_t dim() const override { return kDim; }
  bool deterministic() const override { return true; }

  static Embedding embed_one(std::string_view text) {
    Embedding v(kDim, 0.0);
    std::string tok;
    auto flush = [&] {
      if (tok.empty()) return;
      std::uint64_t h = 0xcbf29ce484222325ULL;
      for (unsigned char c : tok) {
        h ^= c;
        h *= 0x100000001b3ULL;
      }
      v[h % kDim] += 1.0;
      tok.clear();
    };
    for (unsigned char c : text) {
      if (std::isalnum(c))
        tok.push_back(static_cast<char>(std::tolower(c)));
      else
        flush();
    }
    flush();
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
      norm = std::sqrt(norm);
      for (double &x : v) x /= norm;
    }
    return v;
  }
};

/// Cosine similarity; 0 when either vector is zero.
inline double cosine(const Embedding &a, const Embedding &b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct SimConfig {
  double unmatched_gt_score = 0.0;
};

/// gt index -> paired pred index (if any).
using SegmentPairing = std::vector<std::pair<std::size_t, std::optional<std::size_t>>>;

/// Greedy one-to-one pairing in descending IoU order (IoU > 0 only); ties go
/// to the earlier gt, then the earlier pred. Result is in gt order.
inline SegmentPairing pair_segments(const std::vector<CaptionedSegment> &preds,
                                    const std::vector<CaptionedSegment> &gts) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t g = 0; g < gts.size(); ++g)
    for (std::size_t p = 0; p < preds.size(); ++p) {
      const double v = iou(preds[p].interval, gts[g].interval);
      if (v > 0.0) cand.emplace_back(v, g, p);
    }
  std::sort(cand.begin(), cand.end(), [](const auto &x, const auto &y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    if (std::get<1>(x) != std::get<1>(y)) return std::get<1>(x) < std::get<1>(y);
    return std::get<2>(x) < std::get<2>(y);
  });
  SegmentPairing out(gts.size());
  for (std::size_t g = 0; g < gts.size(); ++g) out[g].first = g;
  std::vector<bool> pred_used(preds.size(), false);
  for (const auto &[v, g, p] : cand) {
    if (out[g].second || pred_used[p]) continue;
    out[g].second = p;
    pred_used[p] = true;
  }
  return out;
}

/// Mean over ground-truth segments of the (clamped) caption cosine with the
/// paired prediction.
inline double sim_score(const std::vector<CaptionedSegment> &preds,
                        const std::vector<CaptionedSegment> &gts, Embedder &embedder,
                        const SimConfig &cfg = {}) {
  if (gts.empty()) throw std::invalid_argument("sim_score: empty ground truth");
  const auto pairing = pair_segments(preds, gts);
  std::vector<std::string> texts;
  std::vector<std::size_t> gt_slot(gts.size(), 0), pred_slot(gts.size(), 0);
  for (const auto &[g, p] : pairing) {
    if (!p) continue;
    gt_slot[g] = texts.size();
    texts.push_back(gts[g].caption);
    pred_slot[g] = texts.size();
    texts.push_back(preds[*p].caption);
  }
  std::vector<Embedding> vecs;
  if (!texts.empty()) vecs = embedder.embed(texts);
  if (vecs.size() != texts.size())
    throw EmbedderUnavailable("embedder returned " + std::to_string(vecs.size()) +
                              " vectors for " + std::to_string(texts.size()) + " texts");
  double total = 0.0;
  for (const auto &[g, p] : pairing) {
    if (!p) {
      total += cfg.unmatched_gt_score;
      continue;
    }
    total += std::clamp(cosine(vecs[gt_slot[g]], vecs[pred_slot[g]]), 0.0, 1.0);
  }
  return total / static_cast<double>(gts.size());
}

} // namespace etbench
