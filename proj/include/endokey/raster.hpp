#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>

#include "endokey/error.hpp"

namespace endokey {

/// Single-channel raster, rows = height, cols = width, addressed as (y, x).
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<double>;
using BinaryMask = PlaneT<bool>;
using LabelMap = PlaneT<std::int32_t>;

/// RGB frame with channel values in [0, 1] and its position in the sequence.
struct Frame {
  std::size_t index = 0;
  Plane r, g, b;

  Eigen::Index width() const { return r.cols(); }
  Eigen::Index height() const { return r.rows(); }
};

/// Color-opponent planes; o3 is the intensity-like channel.
struct CocImage {
  Plane o1, o2, o3;
};

template <typename A, typename B>
bool same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename A, typename B>
void require_same_shape(const Eigen::DenseBase<A>& a, const Eigen::DenseBase<B>& b, const char* what) {
  if (!same_shape(a, b)) fail(ErrorKind::InvalidInput, std::string(what) + ": dimension mismatch");
}

/// Throws unless the frame is at least 3x3, channels agree in size and lie in [0, 1].
void validate(const Frame& f);

/// Builds a frame from three equally sized planes.
Frame make_frame(std::size_t index, Plane r, Plane g, Plane b);

/// Gray frame: all three channels equal to `v`.
Frame gray_frame(std::size_t index, const Plane& v);

}  // namespace endokey
