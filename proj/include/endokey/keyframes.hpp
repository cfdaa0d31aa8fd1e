#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "endokey/features.hpp"
#include "endokey/raster.hpp"

namespace endokey {

using Series = Eigen::VectorXd;

struct ScoringParams {
  FeatureChannel channel = FeatureChannel::O3;
  bool log_hu = false;  // signed-log Hu vectors before the distance
  double sigma = 1.0;
  OrbParams orb;
};

/// Per-frame quantities that do not depend on neighbouring frames.
struct FrameFeatures {
  HuVector hu = HuVector::Zero();
  double edge = 0.0;
  std::size_t keypoints = 0;
};

FrameFeatures compute_frame_features(const Frame& f, const ScoringParams& params = {});

/// Raw criteria, their min-max normalized versions and the fused score.
struct ScoreSeries {
  Series d_raw, s_raw, p_raw;
  Series d_norm, s_norm, p_norm;
  Series fused;

  Eigen::Index size() const { return d_raw.size(); }
};

struct AdaptiveWeights {
  double w1 = 0.0, w2 = 0.0, w3 = 0.0;
};

/// Total variation of each normalized criterion; the un-normalized weights.
struct Variation {
  double d1 = 0.0, s1 = 0.0, p1 = 0.0;
};

/// Raw and normalized series from per-frame features; d_raw[0] = 0.
ScoreSeries assemble_scores(std::span<const FrameFeatures> features, bool log_hu = false);

/// Computes features with `workers` threads (0 = hardware concurrency); result is independent of it.
ScoreSeries compute_frame_scores(std::span<const Frame> frames, const ScoringParams& params = {}, unsigned workers = 1);

/// (x - min) / (max - min); a constant series maps to zeros.
Series min_max_normalize(const Series& x);

/// Sum of absolute consecutive differences.
double total_variation(const Series& x);

Variation score_variation(const ScoreSeries& series);

AdaptiveWeights adaptive_weights(const Variation& v);
AdaptiveWeights adaptive_weights(const ScoreSeries& series);

Series fuse_scores(const ScoreSeries& series, const AdaptiveWeights& w);

struct SelectionPolicy {
  enum class Mode { Quantile, TopK, Absolute };

  Mode mode = Mode::Quantile;
  double q = 0.8;
  std::size_t k = 1;
  double threshold = 0.5;

  static SelectionPolicy quantile(double q) { return {Mode::Quantile, q, 1, 0.5}; }
  static SelectionPolicy top_k(std::size_t k) { return {Mode::TopK, 0.8, k, 0.5}; }
  static SelectionPolicy absolute(double threshold) { return {Mode::Absolute, 0.8, 1, threshold}; }
};

std::string to_string(SelectionPolicy::Mode mode);
SelectionPolicy::Mode parse_policy_mode(const std::string& name);

/// Nearest-rank q-quantile: the ceil(q * n)-th smallest value.
double nearest_rank_quantile(const Series& x, double q);

/// Selected frame indices in ascending order.
std::vector<std::size_t> select_keyframes(const Series& fused, const SelectionPolicy& policy);

/// Runs `fn(i)` for i in [0, n) over a fixed pool; exceptions are rethrown for the lowest index.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn);

}  // namespace endokey
