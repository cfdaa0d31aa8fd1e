#include "endokey/features.hpp"

#include <algorithm>
#include <cmath>

#include "endokey/imgproc.hpp"

namespace endokey {

using Eigen::Index;

MomentTable central_moments(const Plane& p) {
  MomentTable m;
  for (Index y = 0; y < p.rows(); ++y) {
    for (Index x = 0; x < p.cols(); ++x) {
      const double v = p(y, x);
      double xp = 1.0;
      for (int i = 0; i <= 3; ++i) {
        double yq = 1.0;
        for (int j = 0; i + j <= 3; ++j) {
          m.raw(i, j) += xp * yq * v;
          yq *= static_cast<double>(y);
        }
        xp *= static_cast<double>(x);
      }
    }
  }
  if (!(m.mass() > 0.0)) fail(ErrorKind::DegenerateInput, "central_moments: plane has zero total mass");

  m.cx = m.raw(1, 0) / m.mass();
  m.cy = m.raw(0, 1) / m.mass();

  // Second pass about the centroid rather than the binomial expansion of raw moments.
  for (Index y = 0; y < p.rows(); ++y) {
    const double dy = static_cast<double>(y) - m.cy;
    for (Index x = 0; x < p.cols(); ++x) {
      const double dx = static_cast<double>(x) - m.cx;
      const double v = p(y, x);
      double xp = 1.0;
      for (int i = 0; i <= 3; ++i) {
        double yq = 1.0;
        for (int j = 0; i + j <= 3; ++j) {
          m.central(i, j) += xp * yq * v;
          yq *= dy;
        }
        xp *= dx;
      }
    }
  }
  m.central(0, 0) = m.mass();
  m.central(1, 0) = 0.0;
  m.central(0, 1) = 0.0;
  return m;
}

HuVector hu_moments(const MomentTable& m) {
  const double m00 = m.mass();
  if (!(m00 > 0.0)) fail(ErrorKind::DegenerateInput, "hu_moments: plane has zero total mass");
  auto eta = [&](int p, int q) { return m.central(p, q) / std::pow(m00, 1.0 + (p + q) / 2.0); };

  const double n20 = eta(2, 0), n02 = eta(0, 2), n11 = eta(1, 1);
  const double n30 = eta(3, 0), n03 = eta(0, 3), n21 = eta(2, 1), n12 = eta(1, 2);

  const double a = n30 + n12, b = n21 + n03;
  const double c = n30 - 3.0 * n12, d = 3.0 * n21 - n03;

  HuVector phi;
  phi[0] = n20 + n02;
  phi[1] = (n20 - n02) * (n20 - n02) + 4.0 * n11 * n11;
  phi[2] = c * c + d * d;
  phi[3] = a * a + b * b;
  phi[4] = c * a * (a * a - 3.0 * b * b) + d * b * (3.0 * a * a - b * b);
  phi[5] = (n20 - n02) * (a * a - b * b) + 4.0 * n11 * a * b;
  phi[6] = d * a * (a * a - 3.0 * b * b) - c * b * (3.0 * a * a - b * b);
  return phi;
}

HuVector hu_moments(const Plane& p) { return hu_moments(central_moments(p)); }

HuVector signed_log(const HuVector& phi) {
  return phi.unaryExpr([](double v) {
    if (v == 0.0) return 0.0;
    return (v > 0.0 ? 1.0 : -1.0) * std::log10(std::abs(v));
  });
}

double edge_score(const Plane& p, double sigma) {
  if (p.rows() < 3 || p.cols() < 3) fail(ErrorKind::InvalidInput, "edge_score: raster smaller than 3x3");
  return gradient_magnitude(sobel_gradients(gaussian_smooth(p, sigma))).mean();
}

const std::array<std::pair<int, int>, 16>& fast_ring() {
  static const std::array<std::pair<int, int>, 16> ring{{
      {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
      {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
  }};
  return ring;
}

double fast_corner_score(const Plane& p, Index y, Index x, double threshold) {
  constexpr int arc = 9;
  const double c = p(y, x);
  std::array<int, 16> sign{};
  std::array<double, 16> excess{};
  const auto& ring = fast_ring();
  for (int k = 0; k < 16; ++k) {
    const double v = p(y + ring[k].second, x + ring[k].first);
    if (v > c + threshold)
      sign[k] = 1;
    else if (v < c - threshold)
      sign[k] = -1;
    excess[k] = std::abs(v - c) - threshold;
  }

  bool corner = false;
  for (int s : {1, -1}) {
    int run = 0;
    for (int k = 0; k < 16 + arc - 1 && !corner; ++k) {
      run = sign[k % 16] == s ? run + 1 : 0;
      if (run >= arc) corner = true;
    }
  }
  if (!corner) return -1.0;

  // Sorted accumulation keeps the score independent of where the ring starts.
  std::vector<double> bright, dark;
  for (int k = 0; k < 16; ++k) {
    if (sign[k] == 1) bright.push_back(excess[k]);
    if (sign[k] == -1) dark.push_back(excess[k]);
  }
  auto sorted_sum = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    double acc = 0.0;
    for (double e : v) acc += e;
    return acc;
  };
  return std::max(sorted_sum(bright), sorted_sum(dark));
}

std::vector<Keypoint> fast_keypoints(const Plane& p, double threshold, bool nms) {
  constexpr Index margin = 3;
  if (p.rows() < 2 * margin + 1 || p.cols() < 2 * margin + 1)
    fail(ErrorKind::InvalidInput, "fast_keypoints: raster smaller than 7x7");
  if (!(threshold >= 0.0)) fail(ErrorKind::InvalidParameter, "fast_keypoints: negative threshold");

  Plane score = Plane::Constant(p.rows(), p.cols(), -1.0);
  for (Index y = margin; y < p.rows() - margin; ++y)
    for (Index x = margin; x < p.cols() - margin; ++x) score(y, x) = fast_corner_score(p, y, x, threshold);

  std::vector<Keypoint> out;
  for (Index y = margin; y < p.rows() - margin; ++y) {
    for (Index x = margin; x < p.cols() - margin; ++x) {
      const double s = score(y, x);
      if (s < 0.0) continue;
      if (nms) {
        bool is_max = true;
        for (Index dy = -1; dy <= 1 && is_max; ++dy)
          for (Index dx = -1; dx <= 1 && is_max; ++dx)
            if ((dy != 0 || dx != 0) && score(y + dy, x + dx) >= s) is_max = false;
        if (!is_max) continue;
      }
      out.push_back({static_cast<double>(x), static_cast<double>(y), 0, s});
    }
  }
  return out;
}

namespace {

struct Tap {
  Index source;
  double weight;
};

// Per-output-sample overlap of [o*f, (o+1)*f) with unit input cells.
std::vector<std::vector<Tap>> box_taps(Index in, Index out, double factor) {
  std::vector<std::vector<Tap>> taps(static_cast<std::size_t>(out));
  for (Index o = 0; o < out; ++o) {
    const double lo = o * factor, hi = std::min((o + 1) * factor, static_cast<double>(in));
    for (Index i = static_cast<Index>(std::floor(lo)); i < in && i < hi; ++i) {
      const double overlap = std::min(hi, i + 1.0) - std::max(lo, static_cast<double>(i));
      if (overlap > 0.0) taps[o].push_back({i, overlap / factor});
    }
  }
  return taps;
}

}  // namespace

Plane area_downsample(const Plane& p, double factor) {
  if (!(factor >= 1.0)) fail(ErrorKind::InvalidParameter, "area_downsample: factor must be >= 1");
  const Index w = static_cast<Index>(std::floor(p.cols() / factor));
  const Index h = static_cast<Index>(std::floor(p.rows() / factor));
  const auto tx = box_taps(p.cols(), w, factor);
  const auto ty = box_taps(p.rows(), h, factor);

  Plane horizontal = Plane::Zero(p.rows(), w);
  for (Index y = 0; y < p.rows(); ++y)
    for (Index x = 0; x < w; ++x)
      for (const Tap& t : tx[x]) horizontal(y, x) += t.weight * p(y, t.source);

  Plane out = Plane::Zero(h, w);
  for (Index y = 0; y < h; ++y)
    for (const Tap& t : ty[y]) out.row(y) += t.weight * horizontal.row(t.source);
  return out;
}

std::vector<Keypoint> pyramid_keypoints(const Plane& p, const OrbParams& params) {
  if (params.levels < 1) fail(ErrorKind::InvalidParameter, "orb: levels must be >= 1");
  if (!(params.scale_factor > 1.0)) fail(ErrorKind::InvalidParameter, "orb: scale factor must be > 1");

  std::vector<Keypoint> all;
  Plane level = p;
  double scale = 1.0;
  for (int l = 0; l < params.levels; ++l) {
    if (l > 0) {
      level = area_downsample(level, params.scale_factor);
      scale *= params.scale_factor;
    }
    if (level.rows() < 7 || level.cols() < 7) break;
    for (Keypoint k : fast_keypoints(level, params.threshold, true)) {
      k.x *= scale;
      k.y *= scale;
      k.level = l;
      all.push_back(k);
    }
  }
  return all;
}

std::size_t orb_count(const Plane& p, const OrbParams& params) { return pyramid_keypoints(p, params).size(); }

Plane scoring_plane(const Frame& f, FeatureChannel channel) {
  switch (channel) {
    case FeatureChannel::O3: return rgb_to_coc(f).o3;
    case FeatureChannel::Luminance: return to_grayscale(f);
  }
  return to_grayscale(f);
}

std::size_t orb_count(const Frame& f, const OrbParams& params, FeatureChannel channel) {
  return orb_count(scoring_plane(f, channel), params);
}

}  // namespace endokey
