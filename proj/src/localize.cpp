#include "endokey/localize.hpp"

#include <algorithm>
#include <limits>

namespace endokey {

BinaryMask depth_boundary(const InverseDepthMap& dm, const CannyParams& params) {
  const BinaryMask valid = dm.mask() && dm.values.isFinite();
  if (!valid.any()) return BinaryMask::Constant(dm.height(), dm.width(), false);
  const double floor_value = valid.select(dm.values, std::numeric_limits<double>::infinity()).minCoeff();
  const Plane filled = valid.select(dm.values, floor_value);
  return canny(normalize_to_u8(filled), params);
}

RefinedBoundary refine_boundary(const BinaryMask& edges, int close_radius) {
  if (!edges.any()) return {edges, true};
  const BinaryMask closed = morph_close(edges, close_radius);
  const LabelMap labels = connected_components(closed, 8);

  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(label_count(labels)) + 1, 0);
  for (Eigen::Index i = 0; i < labels.size(); ++i) ++sizes[static_cast<std::size_t>(labels.data()[i])];
  // Labels follow raster order of first encounter, so the first maximum is the earliest component.
  const auto best = std::max_element(sizes.begin() + 1, sizes.end()) - sizes.begin();
  return {labels == static_cast<std::int32_t>(best), false};
}

FilledRegion boundary_to_mask(const BinaryMask& refined) {
  const BinaryMask filled = fill_holes(refined) || refined;
  if (filled.count() == refined.count()) return {refined, true};
  return {filled, false};
}

LocalizationResult localize(const InverseDepthMap& dm, const LocalizationParams& params) {
  LocalizationResult r;
  r.edges = depth_boundary(dm, params.canny);
  RefinedBoundary refined = refine_boundary(r.edges, params.close_radius);
  r.refined = std::move(refined.mask);
  r.empty_edges = refined.empty;
  FilledRegion region = boundary_to_mask(r.refined);
  r.region = std::move(region.mask);
  r.open_contour = region.open_contour;
  return r;
}

double iou(const BinaryMask& a, const BinaryMask& b) {
  require_same_shape(a, b, "iou");
  const auto inter = (a && b).count();
  const auto uni = (a || b).count();
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

IouReport miou_from_scores(std::vector<double> per_frame) {
  if (per_frame.empty()) fail(ErrorKind::InvalidInput, "miou: empty list");
  IouReport r;
  r.per_frame_iou = std::move(per_frame);
  double acc = 0.0;
  for (double v : r.per_frame_iou) acc += v;
  r.miou = acc / static_cast<double>(r.per_frame_iou.size());
  r.pass_half = r.miou > 0.5;
  return r;
}

IouReport miou(std::span<const std::pair<BinaryMask, BinaryMask>> pairs) {
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (const auto& [pred, truth] : pairs) scores.push_back(iou(pred, truth));
  return miou_from_scores(std::move(scores));
}

}  // namespace endokey
