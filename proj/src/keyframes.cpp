#include "endokey/keyframes.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace endokey {

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const unsigned extra = static_cast<unsigned>(std::min<std::size_t>(workers, n)) - (n > 0 ? 1 : 0);
  std::vector<std::thread> pool;
  pool.reserve(extra);
  for (unsigned t = 0; t < extra; ++t) pool.emplace_back(drain);
  drain();
  for (auto& t : pool) t.join();

  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

FrameFeatures compute_frame_features(const Frame& f, const ScoringParams& params) {
  try {
    validate(f);
    const Plane plane = scoring_plane(f, params.channel);
    FrameFeatures out;
    out.hu = hu_moments(plane);
    out.edge = edge_score(plane, params.sigma);
    out.keypoints = orb_count(plane, params.orb);
    return out;
  } catch (const Error& e) {
    throw Error(e.kind(), std::string(e.what()) + " (frame " + std::to_string(f.index) + ")");
  }
}

Series min_max_normalize(const Series& x) {
  if (x.size() == 0) return x;
  const double lo = x.minCoeff(), hi = x.maxCoeff();
  if (!(hi > lo)) return Series::Zero(x.size());
  return (x.array() - lo) / (hi - lo);
}

ScoreSeries assemble_scores(std::span<const FrameFeatures> features, bool log_hu) {
  const auto n = static_cast<Eigen::Index>(features.size());
  if (n < 2) fail(ErrorKind::InvalidInput, "key-frame scoring needs at least 2 frames");

  ScoreSeries s;
  s.d_raw = Series::Zero(n);
  s.s_raw.resize(n);
  s.p_raw.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& f = features[static_cast<std::size_t>(i)];
    if (i > 0) {
      const auto& prev = features[static_cast<std::size_t>(i - 1)];
      s.d_raw[i] = log_hu ? moment_distance(signed_log(f.hu), signed_log(prev.hu)) : moment_distance(f.hu, prev.hu);
    }
    s.s_raw[i] = f.edge;
    s.p_raw[i] = static_cast<double>(f.keypoints);
  }
  s.d_norm = min_max_normalize(s.d_raw);
  s.s_norm = min_max_normalize(s.s_raw);
  s.p_norm = min_max_normalize(s.p_raw);
  return s;
}

ScoreSeries compute_frame_scores(std::span<const Frame> frames, const ScoringParams& params, unsigned workers) {
  if (frames.size() < 2) fail(ErrorKind::InvalidInput, "key-frame scoring needs at least 2 frames");
  std::vector<FrameFeatures> features(frames.size());
  parallel_for(frames.size(), workers, [&](std::size_t i) { features[i] = compute_frame_features(frames[i], params); });
  return assemble_scores(features, params.log_hu);
}

double total_variation(const Series& x) {
  if (x.size() < 2) return 0.0;
  return (x.tail(x.size() - 1) - x.head(x.size() - 1)).cwiseAbs().sum();
}

Variation score_variation(const ScoreSeries& series) {
  if (series.size() < 2) fail(ErrorKind::InvalidInput, "adaptive weights need at least 2 frames");
  return {total_variation(series.d_norm), total_variation(series.s_norm), total_variation(series.p_norm)};
}

AdaptiveWeights adaptive_weights(const Variation& v) {
  const double total = v.d1 + v.s1 + v.p1;
  if (!(total > 0.0)) fail(ErrorKind::DegenerateInput, "adaptive weights: no criterion varies across the sequence");
  return {v.d1 / total, v.s1 / total, v.p1 / total};
}

AdaptiveWeights adaptive_weights(const ScoreSeries& series) { return adaptive_weights(score_variation(series)); }

Series fuse_scores(const ScoreSeries& series, const AdaptiveWeights& w) {
  Series fused = w.w1 * series.d_norm + w.w2 * series.s_norm + w.w3 * series.p_norm;
  // Rounding can push a convex combination of ones a hair past 1.
  return fused.cwiseMax(0.0).cwiseMin(1.0);
}

std::string to_string(SelectionPolicy::Mode mode) {
  switch (mode) {
    case SelectionPolicy::Mode::Quantile: return "quantile";
    case SelectionPolicy::Mode::TopK: return "top_k";
    case SelectionPolicy::Mode::Absolute: return "absolute";
  }
  return "quantile";
}

SelectionPolicy::Mode parse_policy_mode(const std::string& name) {
  if (name == "quantile") return SelectionPolicy::Mode::Quantile;
  if (name == "top_k" || name == "topk" || name == "top-k") return SelectionPolicy::Mode::TopK;
  if (name == "absolute") return SelectionPolicy::Mode::Absolute;
  fail(ErrorKind::InvalidParameter, "unknown selection policy '" + name + "'");
}

double nearest_rank_quantile(const Series& x, double q) {
  if (x.size() == 0) fail(ErrorKind::InvalidInput, "quantile of an empty series");
  if (!(q > 0.0 && q < 1.0)) fail(ErrorKind::InvalidParameter, "quantile q must lie in (0, 1)");
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  const auto rank = static_cast<std::size_t>(std::clamp(std::ceil(q * n - 1e-9), 1.0, n));
  return sorted[rank - 1];
}

std::vector<std::size_t> select_keyframes(const Series& fused, const SelectionPolicy& policy) {
  const auto n = static_cast<std::size_t>(fused.size());
  if (n == 0) fail(ErrorKind::InvalidInput, "select_keyframes: empty series");

  std::vector<std::size_t> picked;
  switch (policy.mode) {
    case SelectionPolicy::Mode::Quantile: {
      const double cut = nearest_rank_quantile(fused, policy.q);
      for (std::size_t i = 0; i < n; ++i)
        if (fused[static_cast<Eigen::Index>(i)] >= cut) picked.push_back(i);
      break;
    }
    case SelectionPolicy::Mode::TopK: {
      if (policy.k == 0 || policy.k > n) fail(ErrorKind::InvalidParameter, "top_k: k must lie in [1, n]");
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return fused[static_cast<Eigen::Index>(a)] > fused[static_cast<Eigen::Index>(b)];
      });
      picked.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(policy.k));
      std::sort(picked.begin(), picked.end());
      break;
    }
    case SelectionPolicy::Mode::Absolute:
      for (std::size_t i = 0; i < n; ++i)
        if (fused[static_cast<Eigen::Index>(i)] >= policy.threshold) picked.push_back(i);
      break;
  }
  return picked;
}

}  // namespace endokey
