#include "endokey/imgproc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <numeric>

namespace endokey {

namespace {

using Eigen::Index;

bool inside(Index y, Index x, Index h, Index w) { return y >= 0 && x >= 0 && y < h && x < w; }

// 1-D correlation along rows (horizontal) with mirrored borders.
Plane correlate_rows(const Plane& p, const Eigen::VectorXd& taps) {
  const Index radius = taps.size() / 2;
  Plane out(p.rows(), p.cols());
  for (Index y = 0; y < p.rows(); ++y) {
    for (Index x = 0; x < p.cols(); ++x) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) acc += taps[k + radius] * p(y, reflect_index(x + k, p.cols()));
      out(y, x) = acc;
    }
  }
  return out;
}

Plane correlate_cols(const Plane& p, const Eigen::VectorXd& taps) {
  const Index radius = taps.size() / 2;
  Plane out(p.rows(), p.cols());
  for (Index y = 0; y < p.rows(); ++y) {
    for (Index x = 0; x < p.cols(); ++x) {
      double acc = 0.0;
      for (Index k = -radius; k <= radius; ++k) acc += taps[k + radius] * p(reflect_index(y + k, p.rows()), x);
      out(y, x) = acc;
    }
  }
  return out;
}

}  // namespace

Plane to_grayscale(const Frame& f) {
  return (0.299 * f.r + 0.587 * f.g + 0.114 * f.b).min(1.0).max(0.0);
}

Eigen::Matrix3d default_coc_basis() {
  const double s2 = std::sqrt(2.0), s6 = std::sqrt(6.0), s3 = std::sqrt(3.0);
  Eigen::Matrix3d m;
  m << 1.0 / s2, -1.0 / s2, 0.0,
       1.0 / s6, 1.0 / s6, -2.0 / s6,
       1.0 / s3, 1.0 / s3, 1.0 / s3;
  return m;
}

CocImage rgb_to_coc(const Frame& f, const Eigen::Matrix3d& basis) {
  auto channel = [&](int row) -> Plane {
    return basis(row, 0) * f.r + basis(row, 1) * f.g + basis(row, 2) * f.b;
  };
  return {channel(0), channel(1), channel(2)};
}

Index reflect_index(Index i, Index n) {
  const Index period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

Eigen::VectorXd gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorKind::InvalidParameter, "gaussian sigma must be positive");
  const Index radius = static_cast<Index>(std::ceil(3.0 * sigma));
  Eigen::VectorXd taps(2 * radius + 1);
  for (Index k = -radius; k <= radius; ++k) {
    const double x = static_cast<double>(k);
    taps[k + radius] = std::exp(-x * x / (2.0 * sigma * sigma));
  }
  return taps / taps.sum();
}

Plane gaussian_smooth(const Plane& p, double sigma) {
  const Eigen::VectorXd taps = gaussian_kernel(sigma);
  return correlate_cols(correlate_rows(p, taps), taps);
}

Gradients sobel_gradients(const Plane& p) {
  if (p.rows() < 3 || p.cols() < 3) fail(ErrorKind::InvalidInput, "sobel_gradients: raster smaller than 3x3");
  const Index h = p.rows(), w = p.cols();
  Gradients g{Plane(h, w), Plane(h, w)};
  for (Index y = 0; y < h; ++y) {
    const Index ym = reflect_index(y - 1, h), yp = reflect_index(y + 1, h);
    for (Index x = 0; x < w; ++x) {
      const Index xm = reflect_index(x - 1, w), xp = reflect_index(x + 1, w);
      g.sx(y, x) = (p(ym, xp) - p(ym, xm)) + 2.0 * (p(y, xp) - p(y, xm)) + (p(yp, xp) - p(yp, xm));
      g.sy(y, x) = (p(yp, xm) - p(ym, xm)) + 2.0 * (p(yp, x) - p(ym, x)) + (p(yp, xp) - p(ym, xp));
    }
  }
  return g;
}

Plane normalize_to_u8(const Plane& p) {
  const double lo = p.minCoeff(), hi = p.maxCoeff();
  if (!(hi > lo)) return Plane::Zero(p.rows(), p.cols());
  return (p - lo) / (hi - lo) * 255.0;
}

double otsu_threshold(const Plane& p) {
  constexpr int bins = 256;
  const double top = p.maxCoeff();
  if (!(top > 0.0)) return 0.0;

  std::array<double, bins> hist{};
  for (Index i = 0; i < p.size(); ++i) {
    const int b = std::clamp(static_cast<int>(p.data()[i] / top * bins), 0, bins - 1);
    hist[b] += 1.0;
  }

  const double total = static_cast<double>(p.size());
  double sum_all = 0.0;
  for (int b = 0; b < bins; ++b) sum_all += b * hist[b];

  double w0 = 0.0, sum0 = 0.0, best = -1.0;
  int best_bin = 0;
  for (int b = 0; b < bins - 1; ++b) {
    w0 += hist[b];
    sum0 += b * hist[b];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0, mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_bin = b;
    }
  }
  return (best_bin + 1) * top / bins;
}

BinaryMask canny(const Plane& p, const CannyParams& params) {
  if (params.sigma < 0.0) fail(ErrorKind::InvalidParameter, "canny: negative sigma");
  const Plane smoothed = params.sigma > 0.0 ? gaussian_smooth(p, params.sigma) : p;
  const Gradients g = sobel_gradients(smoothed);
  const Plane mag = gradient_magnitude(g);

  const double high = params.high ? *params.high : otsu_threshold(mag);
  const double low = params.low ? *params.low : 0.5 * high;
  if (low < 0.0 || low > high) fail(ErrorKind::InvalidParameter, "canny: require 0 <= low <= high");

  const Index h = mag.rows(), w = mag.cols();
  auto at = [&](Index y, Index x) { return inside(y, x, h, w) ? mag(y, x) : 0.0; };

  // tan(22.5deg) and tan(67.5deg)
  const double t1 = std::sqrt(2.0) - 1.0, t2 = std::sqrt(2.0) + 1.0;
  BinaryMask thin = BinaryMask::Constant(h, w, false);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      const double m = mag(y, x);
      if (!(m > 0.0)) continue;
      const double gx = g.sx(y, x), gy = g.sy(y, x);
      const double ax = std::abs(gx), ay = std::abs(gy);
      double neg, pos;
      if (ay <= t1 * ax) {
        neg = at(y, x - 1);
        pos = at(y, x + 1);
      } else if (ay > t2 * ax) {
        neg = at(y - 1, x);
        pos = at(y + 1, x);
      } else if (gx * gy > 0.0) {
        neg = at(y - 1, x - 1);
        pos = at(y + 1, x + 1);
      } else {
        neg = at(y + 1, x - 1);
        pos = at(y - 1, x + 1);
      }
      thin(y, x) = m > neg && m >= pos;
    }
  }

  BinaryMask edges = BinaryMask::Constant(h, w, false);
  std::deque<std::pair<Index, Index>> queue;
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (thin(y, x) && mag(y, x) >= high) {
        edges(y, x) = true;
        queue.emplace_back(y, x);
      }
    }
  }
  while (!queue.empty()) {
    const auto [y, x] = queue.front();
    queue.pop_front();
    for (Index dy = -1; dy <= 1; ++dy) {
      for (Index dx = -1; dx <= 1; ++dx) {
        const Index ny = y + dy, nx = x + dx;
        if (!inside(ny, nx, h, w) || edges(ny, nx) || !thin(ny, nx) || mag(ny, nx) < low) continue;
        edges(ny, nx) = true;
        queue.emplace_back(ny, nx);
      }
    }
  }
  return edges;
}

BinaryMask canny(const Plane& p, double low, double high, double sigma) {
  return canny(p, CannyParams{sigma, low, high});
}

LabelMap connected_components(const BinaryMask& m, int connectivity) {
  if (connectivity != 4 && connectivity != 8) fail(ErrorKind::InvalidParameter, "connectivity must be 4 or 8");
  const Index h = m.rows(), w = m.cols();
  LabelMap prov = LabelMap::Zero(h, w);
  std::vector<std::int32_t> parent{0};

  auto find = [&](std::int32_t a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  };
  auto unite = [&](std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  };

  // Already-visited neighbours in raster order.
  std::vector<std::pair<int, int>> back{{0, -1}, {-1, 0}};
  if (connectivity == 8) {
    back.emplace_back(-1, -1);
    back.emplace_back(-1, 1);
  }

  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (!m(y, x)) continue;
      std::int32_t label = 0;
      for (const auto& [dy, dx] : back) {
        const Index ny = y + dy, nx = x + dx;
        if (!inside(ny, nx, h, w) || prov(ny, nx) == 0) continue;
        if (label == 0)
          label = prov(ny, nx);
        else
          unite(label, prov(ny, nx));
      }
      if (label == 0) {
        label = static_cast<std::int32_t>(parent.size());
        parent.push_back(label);
      }
      prov(y, x) = label;
    }
  }

  std::vector<std::int32_t> final_label(parent.size(), 0);
  std::int32_t next = 0;
  LabelMap out = LabelMap::Zero(h, w);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (prov(y, x) == 0) continue;
      const std::int32_t root = find(prov(y, x));
      if (final_label[root] == 0) final_label[root] = ++next;
      out(y, x) = final_label[root];
    }
  }
  return out;
}

std::int32_t label_count(const LabelMap& labels) { return labels.size() == 0 ? 0 : labels.maxCoeff(); }

std::vector<std::pair<int, int>> disk_offsets(int radius) {
  if (radius < 1) fail(ErrorKind::InvalidParameter, "structuring element radius must be >= 1");
  const double limit = (radius + 0.5) * (radius + 0.5);
  std::vector<std::pair<int, int>> offsets;
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      if (dx * dx + dy * dy <= limit) offsets.emplace_back(dy, dx);
  return offsets;
}

BinaryMask dilate(const BinaryMask& m, int radius) {
  const auto offsets = disk_offsets(radius);
  const Index h = m.rows(), w = m.cols();
  BinaryMask out = BinaryMask::Constant(h, w, false);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      if (!m(y, x)) continue;
      for (const auto& [dy, dx] : offsets)
        if (inside(y + dy, x + dx, h, w)) out(y + dy, x + dx) = true;
    }
  }
  return out;
}

BinaryMask erode(const BinaryMask& m, int radius) {
  const auto offsets = disk_offsets(radius);
  const Index h = m.rows(), w = m.cols();
  BinaryMask out = BinaryMask::Constant(h, w, false);
  for (Index y = 0; y < h; ++y) {
    for (Index x = 0; x < w; ++x) {
      bool keep = true;
      for (const auto& [dy, dx] : offsets) {
        if (inside(y + dy, x + dx, h, w) && !m(y + dy, x + dx)) {
          keep = false;
          break;
        }
      }
      out(y, x) = keep;
    }
  }
  return out;
}

BinaryMask morph_close(const BinaryMask& m, int radius) { return erode(dilate(m, radius), radius); }

BinaryMask fill_holes(const BinaryMask& m) {
  if (m.size() == 0) return m;
  const Index h = m.rows(), w = m.cols();
  BinaryMask outside = BinaryMask::Constant(h, w, false);
  std::deque<std::pair<Index, Index>> queue;
  auto seed = [&](Index y, Index x) {
    if (!m(y, x) && !outside(y, x)) {
      outside(y, x) = true;
      queue.emplace_back(y, x);
    }
  };
  for (Index x = 0; x < w; ++x) {
    seed(0, x);
    seed(h - 1, x);
  }
  for (Index y = 0; y < h; ++y) {
    seed(y, 0);
    seed(y, w - 1);
  }
  constexpr int dy4[] = {-1, 1, 0, 0}, dx4[] = {0, 0, -1, 1};
  while (!queue.empty()) {
    const auto [y, x] = queue.front();
    queue.pop_front();
    for (int k = 0; k < 4; ++k) {
      const Index ny = y + dy4[k], nx = x + dx4[k];
      if (inside(ny, nx, h, w)) seed(ny, nx);
    }
  }
  return !outside;
}

}  // namespace endokey
