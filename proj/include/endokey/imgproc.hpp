#pragma once

#include <Eigen/Core>

#include <optional>
#include <utility>
#include <vector>

#include "endokey/raster.hpp"

namespace endokey {

Plane to_grayscale(const Frame& f);

/// Orthonormal opponent basis: rows map (R, G, B) to (O1, O2, O3).
Eigen::Matrix3d default_coc_basis();

CocImage rgb_to_coc(const Frame& f, const Eigen::Matrix3d& basis = default_coc_basis());

/// Mirror index into [0, n) with edge duplication (-1 -> 0, n -> n-1), periodic beyond.
Eigen::Index reflect_index(Eigen::Index i, Eigen::Index n);

/// Normalized 1-D Gaussian taps, length 2*ceil(3*sigma)+1.
Eigen::VectorXd gaussian_kernel(double sigma);

/// Separable Gaussian blur with mirrored borders.
Plane gaussian_smooth(const Plane& p, double sigma);

struct Gradients {
  Plane sx, sy;
};

/// 3x3 Sobel responses (correlation form, right minus left / bottom minus top).
Gradients sobel_gradients(const Plane& p);

/// Pointwise hypot of two gradient planes.
template <typename A, typename B>
Plane gradient_magnitude(const Eigen::ArrayBase<A>& sx, const Eigen::ArrayBase<B>& sy) {
  require_same_shape(sx, sy, "gradient_magnitude");
  return (sx.square() + sy.square()).sqrt();
}

inline Plane gradient_magnitude(const Gradients& g) { return gradient_magnitude(g.sx, g.sy); }

/// Affine stretch of [min, max] onto [0, 255]; constant input maps to 0.
Plane normalize_to_u8(const Plane& p);

/// Otsu threshold over a 256-bin histogram spanning [0, max(p)].
double otsu_threshold(const Plane& p);

struct CannyParams {
  double sigma = 1.0;           // 0 disables pre-smoothing
  std::optional<double> low;    // default 0.5 * high
  std::optional<double> high;   // default Otsu on gradient magnitude
};

/// Canny edge detector: smoothing, Sobel, 4-direction NMS, 8-connected hysteresis.
BinaryMask canny(const Plane& p, const CannyParams& params = {});

/// Convenience overload with explicit thresholds and no extra smoothing beyond `sigma`.
BinaryMask canny(const Plane& p, double low, double high, double sigma = 0.0);

/// Labels foreground components in first raster-encounter order, starting at 1.
LabelMap connected_components(const BinaryMask& m, int connectivity = 8);

/// Number of labels (max label) in a label map.
std::int32_t label_count(const LabelMap& labels);

/// Offsets of the discrete disk dx^2 + dy^2 <= (r + 1/2)^2.
std::vector<std::pair<int, int>> disk_offsets(int radius);

BinaryMask dilate(const BinaryMask& m, int radius);

/// Erosion treating out-of-raster pixels as foreground.
BinaryMask erode(const BinaryMask& m, int radius);

BinaryMask morph_close(const BinaryMask& m, int radius);

/// Background pixels not 4-connected to the border become foreground.
BinaryMask fill_holes(const BinaryMask& m);

}  // namespace endokey
