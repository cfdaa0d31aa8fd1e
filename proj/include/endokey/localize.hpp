#pragma once

#include <span>
#include <utility>
#include <vector>

#include "endokey/depth.hpp"
#include "endokey/imgproc.hpp"

namespace endokey {

/// Canny over the [0, 255]-stretched inverse depth map. Invalid pixels take the smallest valid value.
BinaryMask depth_boundary(const InverseDepthMap& dm, const CannyParams& params = {});

struct RefinedBoundary {
  BinaryMask mask;
  bool empty = false;  // no edge pixels to refine
};

/// Morphological close, then keep the largest 8-connected component (earliest label on ties).
RefinedBoundary refine_boundary(const BinaryMask& edges, int close_radius = 5);

struct FilledRegion {
  BinaryMask mask;
  bool open_contour = false;  // nothing enclosed; mask is the boundary itself
};

FilledRegion boundary_to_mask(const BinaryMask& refined);

struct LocalizationParams {
  CannyParams canny;
  int close_radius = 5;
};

struct LocalizationResult {
  BinaryMask edges;
  BinaryMask refined;
  BinaryMask region;
  bool empty_edges = false;
  bool open_contour = false;
};

LocalizationResult localize(const InverseDepthMap& dm, const LocalizationParams& params = {});

/// |a & b| / |a | b|; 1 when both are empty.
double iou(const BinaryMask& a, const BinaryMask& b);

struct IouReport {
  std::vector<double> per_frame_iou;
  double miou = 0.0;
  bool pass_half = false;  // strictly greater than 0.5
};

IouReport miou(std::span<const std::pair<BinaryMask, BinaryMask>> pairs);
IouReport miou_from_scores(std::vector<double> per_frame);

}  // namespace endokey
