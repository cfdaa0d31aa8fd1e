#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <utility>
#include <vector>

#include "endokey/raster.hpp"

namespace endokey {

/// Raw and central moments up to order 3. `central(p, q)` holds mu_pq about the centroid,
/// with x = column and y = row.
struct MomentTable {
  Eigen::Matrix4d raw = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d central = Eigen::Matrix4d::Zero();
  double cx = 0.0, cy = 0.0;

  double mass() const { return raw(0, 0); }
};

using HuVector = Eigen::Matrix<double, 7, 1>;

MomentTable central_moments(const Plane& p);

/// Seven Hu invariants from scale-normalized central moments.
HuVector hu_moments(const Plane& p);
HuVector hu_moments(const MomentTable& m);

/// sign(phi) * log10|phi|, zero stays zero.
HuVector signed_log(const HuVector& phi);

/// Sum of squared component differences.
template <typename A, typename B>
double moment_distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  return (a - b).squaredNorm();
}

/// Mean gradient magnitude of the Gaussian-smoothed plane.
double edge_score(const Plane& p, double sigma = 1.0);

struct Keypoint {
  double x = 0.0, y = 0.0;  // level-0 coordinates
  int level = 0;
  double score = 0.0;
};

/// The 16-pixel radius-3 Bresenham ring as (dx, dy), clockwise from 12 o'clock.
const std::array<std::pair<int, int>, 16>& fast_ring();

/// FAST-9 segment test at a single pixel; returns the corner score or a negative value.
double fast_corner_score(const Plane& p, Eigen::Index y, Eigen::Index x, double threshold);

/// FAST-9 corners at least 3 pixels from the border, optionally with 3x3 non-max suppression.
std::vector<Keypoint> fast_keypoints(const Plane& p, double threshold, bool nms = true);

/// Downsample by a (possibly fractional) factor with exact box-overlap averaging.
Plane area_downsample(const Plane& p, double factor);

struct OrbParams {
  int levels = 8;
  double scale_factor = 1.2;
  double threshold = 20.0 / 255.0;
};

std::vector<Keypoint> pyramid_keypoints(const Plane& p, const OrbParams& params = {});

/// Number of NMS'd FAST corners across the scale pyramid.
std::size_t orb_count(const Plane& p, const OrbParams& params = {});

/// Which plane of a frame feeds the moment, edge and keypoint criteria.
enum class FeatureChannel { O3, Luminance };

Plane scoring_plane(const Frame& f, FeatureChannel channel);

std::size_t orb_count(const Frame& f, const OrbParams& params = {}, FeatureChannel channel = FeatureChannel::O3);

}  // namespace endokey
