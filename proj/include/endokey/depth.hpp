#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>

#include "endokey/raster.hpp"

namespace endokey {

/// Relative inverse depth (larger = nearer) with an optional validity mask.
template <typename Scalar>
struct InverseDepthMapT {
  PlaneT<Scalar> values;
  std::optional<BinaryMask> valid;

  InverseDepthMapT() = default;
  explicit InverseDepthMapT(PlaneT<Scalar> v, std::optional<BinaryMask> mask = std::nullopt)
      : values(std::move(v)), valid(std::move(mask)) {
    if (valid) require_same_shape(values, *valid, "inverse depth mask");
  }

  Eigen::Index width() const { return values.cols(); }
  Eigen::Index height() const { return values.rows(); }

  BinaryMask mask() const {
    return valid ? *valid : BinaryMask::Constant(values.rows(), values.cols(), true);
  }
};

using InverseDepthMap = InverseDepthMapT<double>;

/// Affine alignment d' ~ s * d + t.
template <typename Scalar>
struct ScaleShiftT {
  Scalar s = 1;
  Scalar t = 0;
};

using ScaleShift = ScaleShiftT<double>;

template <typename Scalar>
using DepthPair = std::pair<InverseDepthMapT<Scalar>, InverseDepthMapT<Scalar>>;

namespace detail {

template <typename Scalar>
Scalar determinant_tolerance() {
  return std::max(Scalar(1e-12), Scalar(16) * std::numeric_limits<Scalar>::epsilon());
}

template <typename Scalar>
BinaryMask joint_mask(const InverseDepthMapT<Scalar>& pred, const InverseDepthMapT<Scalar>& gt) {
  require_same_shape(pred.values, gt.values, "depth pair");
  BinaryMask m = pred.mask() && gt.mask();
  return m && pred.values.isFinite() && gt.values.isFinite();
}

// 2x2 block averaging over valid pixels; odd trailing rows/columns form partial blocks.
template <typename Scalar>
std::pair<PlaneT<Scalar>, BinaryMask> halve(const PlaneT<Scalar>& v, const BinaryMask& valid) {
  const Eigen::Index h = (v.rows() + 1) / 2, w = (v.cols() + 1) / 2;
  PlaneT<Scalar> out = PlaneT<Scalar>::Zero(h, w);
  BinaryMask out_valid = BinaryMask::Constant(h, w, false);
  for (Eigen::Index y = 0; y < h; ++y) {
    for (Eigen::Index x = 0; x < w; ++x) {
      Scalar acc = 0;
      int n = 0;
      for (Eigen::Index yy = 2 * y; yy < std::min(2 * y + 2, v.rows()); ++yy)
        for (Eigen::Index xx = 2 * x; xx < std::min(2 * x + 2, v.cols()); ++xx)
          if (valid(yy, xx)) {
            acc += v(yy, xx);
            ++n;
          }
      if (n > 0) {
        out(y, x) = acc / Scalar(n);
        out_valid(y, x) = true;
      }
    }
  }
  return {std::move(out), std::move(out_valid)};
}

template <typename Scalar>
Scalar forward_difference_sum(const PlaneT<Scalar>& q, const BinaryMask& valid) {
  Scalar acc = 0;
  for (Eigen::Index y = 0; y < q.rows(); ++y) {
    for (Eigen::Index x = 0; x < q.cols(); ++x) {
      if (!valid(y, x)) continue;
      if (x + 1 < q.cols() && valid(y, x + 1)) acc += std::abs(q(y, x + 1) - q(y, x));
      if (y + 1 < q.rows() && valid(y + 1, x)) acc += std::abs(q(y + 1, x) - q(y, x));
    }
  }
  return acc;
}

}  // namespace detail

/// Closed-form least-squares (s, t) over jointly valid pixels via the 2x2 normal equations.
template <typename Scalar>
ScaleShiftT<Scalar> fit_scale_shift(const InverseDepthMapT<Scalar>& pred, const InverseDepthMapT<Scalar>& gt) {
  const BinaryMask valid = detail::joint_mask(pred, gt);
  if (valid.count() < 2) fail(ErrorKind::DegenerateInput, "fit_scale_shift: fewer than 2 valid pixels");

  Eigen::Matrix<Scalar, 2, 2> normal = Eigen::Matrix<Scalar, 2, 2>::Zero();
  Eigen::Matrix<Scalar, 2, 1> rhs = Eigen::Matrix<Scalar, 2, 1>::Zero();
  for (Eigen::Index i = 0; i < pred.values.size(); ++i) {
    if (!valid.data()[i]) continue;
    const Eigen::Matrix<Scalar, 2, 1> d(pred.values.data()[i], Scalar(1));
    normal += d * d.transpose();
    rhs += d * gt.values.data()[i];
  }

  const Scalar det = normal.determinant();
  const Scalar magnitude = std::max(Scalar(1), normal.squaredNorm());
  if (!(std::abs(det) >= detail::determinant_tolerance<Scalar>() * magnitude))
    fail(ErrorKind::DegenerateInput, "fit_scale_shift: prediction is constant on the valid set");

  const Eigen::Matrix<Scalar, 2, 1> p = normal.inverse() * rhs;
  return {p[0], p[1]};
}

/// Q = s * pred + t - gt, zero on invalid pixels.
template <typename Scalar>
PlaneT<Scalar> residual_map(const InverseDepthMapT<Scalar>& pred, const InverseDepthMapT<Scalar>& gt,
                            const ScaleShiftT<Scalar>& p) {
  const BinaryMask valid = detail::joint_mask(pred, gt);
  return valid.select(p.s * pred.values + p.t - gt.values, Scalar(0));
}

/// Half mean squared residual after optimal alignment.
template <typename Scalar>
Scalar ssi_loss(const InverseDepthMapT<Scalar>& pred, const InverseDepthMapT<Scalar>& gt) {
  const ScaleShiftT<Scalar> p = fit_scale_shift(pred, gt);
  const Scalar n = static_cast<Scalar>(detail::joint_mask(pred, gt).count());
  return residual_map(pred, gt, p).square().sum() / (Scalar(2) * n);
}

/// Multi-scale sum of absolute forward differences of the alignment residual, normalized by the
/// full-resolution valid pixel count. The alignment is fitted once at full resolution; scale k
/// halves the inputs k-1 times before the residual is formed.
template <typename Scalar>
Scalar gradient_matching_loss(const InverseDepthMapT<Scalar>& pred, const InverseDepthMapT<Scalar>& gt,
                              int k_scales = 4) {
  if (k_scales < 1) fail(ErrorKind::InvalidParameter, "gradient_matching_loss: k_scales must be >= 1");
  const ScaleShiftT<Scalar> p = fit_scale_shift(pred, gt);

  BinaryMask valid = detail::joint_mask(pred, gt);
  const Scalar n = static_cast<Scalar>(valid.count());
  PlaneT<Scalar> d = pred.values, dref = gt.values;

  Scalar total = 0;
  for (int k = 0; k < k_scales; ++k) {
    if (k > 0) {
      auto [hd, hv] = detail::halve(d, valid);
      dref = detail::halve(dref, valid).first;
      d = std::move(hd);
      valid = std::move(hv);
    }
    if (d.rows() < 2 || d.cols() < 2)
      fail(ErrorKind::InvalidParameter, "gradient_matching_loss: raster below 2x2 at the coarsest scale");
    const PlaneT<Scalar> q = valid.select(p.s * d + p.t - dref, Scalar(0));
    total += detail::forward_difference_sum(q, valid);
  }
  return total / n;
}

/// Mean over pairs of ssi_loss + alpha * gradient_matching_loss.
template <typename Scalar>
Scalar total_loss(std::span<const DepthPair<Scalar>> pairs, Scalar alpha = Scalar(0.5), int k_scales = 4) {
  if (pairs.empty()) fail(ErrorKind::InvalidInput, "total_loss: empty pair list");
  Scalar acc = 0;
  for (const auto& [pred, gt] : pairs) acc += ssi_loss(pred, gt) + alpha * gradient_matching_loss(pred, gt, k_scales);
  return acc / static_cast<Scalar>(pairs.size());
}

}  // namespace endokey
