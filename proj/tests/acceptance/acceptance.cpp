// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero on any failure
// other than a known conflict between a stated target and its defining formula.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "endokey/depth.hpp"
#include "endokey/depth_io.hpp"
#include "endokey/features.hpp"
#include "endokey/image_io.hpp"
#include "endokey/imgproc.hpp"
#include "endokey/keyframes.hpp"
#include "endokey/localize.hpp"
#include "endokey/pipeline.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"
#include "support/tempdir.hpp"

using namespace endokey;
using Eigen::Index;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
  // Failed only on a stated target that contradicts the defining formula; every formula-consistent check held.
  bool known_conflict = false;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double plain_loss(const Plane& d, const Plane& g, double s, double t) {
  return (s * d + t - g).square().sum() / (2.0 * static_cast<double>(d.size()));
}

Outcome closed_form_optimality() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::normal_distribution<double> noise(0.0, 0.05);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  long violations = 0, checks = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Plane d = oracle::random_plane(4, 8, rng, 0.05, 1.0);
    Plane g = coef(rng) * d + coef(rng);
    for (Index i = 0; i < g.size(); ++i) g.data()[i] += noise(rng);
    if (trial % 4 == 0) g = oracle::random_plane(4, 8, rng);
    const InverseDepthMap pred(d), gt(g);
    const ScaleShift p = fit_scale_shift(pred, gt);
    const double best = ssi_loss(pred, gt);
    for (int i = 0; i < 50; ++i)
      for (int j = 0; j < 50; ++j) {
        const double s = p.s * (0.5 + i / 49.0), t = p.t * (0.5 + j / 49.0);
        const double other = plain_loss(d, g, s, t);
        ++checks;
        if (best > other * (1.0 + 1e-12) + 1e-300) ++violations;
      }
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 5.0, fmt("%ld violations over %ld grid points, %.2f s", violations, checks, secs)};
}

Outcome affine_invariance() {
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> ua(0.1, 10.0), ub(-5.0, 5.0);
  double worst_ssi = 0.0, worst_grad = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const Plane d = oracle::random_plane(16, 16, rng, 0.05, 1.0), g = oracle::random_plane(16, 16, rng, 0.05, 1.0);
    const double a = ua(rng), b = ub(rng);
    const InverseDepthMap pred(d), moved(a * d + b), gt(g);
    const double l = ssi_loss(pred, gt), lm = ssi_loss(moved, gt);
    const double r = gradient_matching_loss(pred, gt), rm = gradient_matching_loss(moved, gt);
    worst_ssi = std::max(worst_ssi, std::abs(lm - l) / (1e-10 * (1.0 + l)));
    worst_grad = std::max(worst_grad, std::abs(rm - r) / (1e-10 * (1.0 + r)));
  }
  return {worst_ssi <= 1.0 && worst_grad <= 1.0,
          fmt("worst |diff| / bound: ssi %.3g, gradient %.3g (must be <= 1)", worst_ssi, worst_grad)};
}

Outcome worked_value() {
  Plane d(1, 3), g(1, 3);
  d << 1, 2, 3;
  g << 1, 2, 4;
  const auto [os, ot] = oracle::affine_fit({1, 2, 3}, {1, 2, 4});
  const double oracle_loss = plain_loss(d, g, os, ot);
  const ScaleShift p = fit_scale_shift(InverseDepthMap(d), InverseDepthMap(g));
  const double loss = ssi_loss(InverseDepthMap(d), InverseDepthMap(g));
  const bool consistent = std::abs(p.s - 1.5) <= 1e-12 && std::abs(p.t + 2.0 / 3.0) <= 1e-12 &&
                          std::abs(p.s - os) <= 1e-12 && std::abs(p.t - ot) <= 1e-12 &&
                          std::abs(loss - oracle_loss) <= 1e-12;
  // The stated target 1/12 equals half the residual sum without the 1/N factor; the oracle gives 1/36.
  const bool stated = std::abs(loss - 1.0 / 12.0) <= 1e-12;
  Outcome o{consistent && stated,
            fmt("s=%.17g t=%.17g loss=%.17g (oracle s=%.17g t=%.17g loss=%.17g; stated target 1/12)", p.s, p.t, loss,
                os, ot, oracle_loss)};
  o.known_conflict = consistent && !stated;
  return o;
}

Outcome alpha_conformance() {
  std::mt19937_64 rng(1004);
  double worst = 0.0;
  const RunConfig defaults;
  for (int trial = 0; trial < 20; ++trial) {
    const InverseDepthMap pred(oracle::random_plane(16, 16, rng)), gt(oracle::random_plane(16, 16, rng));
    const std::vector<DepthPair<double>> one{{pred, gt}};
    const double total = total_loss<double>(one);
    const double from_config = total_loss<double>(one, defaults.alpha, defaults.k_scales);
    const double want = ssi_loss(pred, gt) + 0.5 * gradient_matching_loss(pred, gt);
    worst = std::max({worst, std::abs(total - want), std::abs(from_config - want)});
  }
  return {worst <= 1e-15 && defaults.alpha == 0.5, fmt("default alpha %.17g, worst |diff| %.3g", defaults.alpha, worst)};
}

Outcome hu_invariance() {
  const Plane p = synthetic::render(synthetic::asymmetric_blob(60.0, 58.0), 120, 120);
  const HuVector base = hu_moments(p);
  Plane moved = Plane::Zero(p.rows() + 20, p.cols() + 20);
  moved.block(11, 6, p.rows(), p.cols()) = p;
  double exact = (hu_moments(moved) - base).cwiseAbs().maxCoeff();
  exact = std::max(exact, (hu_moments(oracle::rot90(p)) - base).cwiseAbs().maxCoeff());
  const HuVector rot = hu_moments(synthetic::rotate_bilinear(p, 30.0));
  double rel = 0.0;
  for (int i = 0; i < 7; ++i) rel = std::max(rel, std::abs(rot[i] - base[i]) / std::abs(base[i]));
  return {exact <= 1e-12 && rel <= 0.02,
          fmt("translation/90deg max |diff| %.3g; 30deg max relative change %.3g%%", exact, 100 * rel)};
}

Outcome sobel_ramp() {
  Plane p(24, 32);
  for (Index y = 0; y < 24; ++y)
    for (Index x = 0; x < 32; ++x) p(y, x) = double(x);
  const Gradients g = sobel_gradients(p);
  const Plane mag = gradient_magnitude(g);
  long bad = 0;
  for (Index y = 1; y < 23; ++y)
    for (Index x = 1; x < 31; ++x) bad += mag(y, x) != 8.0;
  return {bad == 0, fmt("%ld interior pixels differ from 8", bad)};
}

Outcome fast_oracle() {
  std::mt19937_64 rng(1007);
  const double t = OrbParams{}.threshold;
  int mismatches = 0;
  std::size_t corners = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const Plane p = oracle::random_plane(64, 64, rng);
    std::set<std::pair<Index, Index>> got;
    for (const auto& k : fast_keypoints(p, t, false)) got.emplace(static_cast<Index>(k.x), static_cast<Index>(k.y));
    const auto want = oracle::fast_corner_set(p, t);
    corners += want.size();
    mismatches += got != want;
  }
  return {mismatches == 0, fmt("%d of 50 planes differ (%zu oracle corners)", mismatches, corners)};
}

Outcome fusion_algebra() {
  std::mt19937_64 rng(1008);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_sum = 0.0;
  long out_of_range = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index n = 2 + trial % 40;
    ScoreSeries s;
    s.d_raw = Series::NullaryExpr(n, [&] { return u(rng); });
    s.s_raw = Series::NullaryExpr(n, [&] { return 10 * u(rng); });
    s.p_raw = Series::NullaryExpr(n, [&] { return std::floor(300 * u(rng)); });
    s.d_norm = min_max_normalize(s.d_raw);
    s.s_norm = min_max_normalize(s.s_raw);
    s.p_norm = min_max_normalize(s.p_raw);
    const AdaptiveWeights w = adaptive_weights(s);
    worst_sum = std::max(worst_sum, std::abs(w.w1 + w.w2 + w.w3 - 1.0));
    const Series f = fuse_scores(s, w);
    out_of_range += (f.array() < 0.0 || f.array() > 1.0).count();
  }
  const AdaptiveWeights worked = adaptive_weights(Variation{3, 2, 5});
  const bool exact = worked.w1 == 0.3 && worked.w2 == 0.2 && worked.w3 == 0.5;
  return {worst_sum <= 1e-12 && out_of_range == 0 && exact,
          fmt("max |sum-1| %.3g, %ld fused values outside [0,1], worked case (%.17g, %.17g, %.17g)", worst_sum,
              out_of_range, worked.w1, worked.w2, worked.w3)};
}

void write_frames(const fs::path& dir, const std::vector<Frame>& frames, int bit_depth = 8) {
  fs::create_directories(dir);
  for (const Frame& f : frames) write_frame_png(dir / fmt("frame_%03zu.png", f.index), f, bit_depth);
}

Outcome keyframe_recovery(const fs::path& work) {
  const auto t0 = Clock::now();
  const std::vector<std::size_t> engineered{7, 16, 25, 33, 44};
  const std::vector<int> as_int(engineered.begin(), engineered.end());
  // 16-bit frames keep the engineered shape jumps well above quantization noise.
  write_frames(work / "kf", synthetic::keyframe_sequence(as_int, 50, 64), 16);
  RunConfig cfg;
  cfg.policy = SelectionPolicy::top_k(5);
  const ScoreRun run = run_select(ingest_frames((work / "kf").string()), cfg, work / "kf_out", 0);

  // Confirm the construction: every engineered frame beats every other frame on each raw criterion.
  bool dominates = true;
  double margin[3];
  const Series* raw[3] = {&run.series.d_raw, &run.series.s_raw, &run.series.p_raw};
  for (int c = 0; c < 3; ++c) {
    double lo = INFINITY, hi = -INFINITY;
    for (Index i = 0; i < raw[c]->size(); ++i) {
      const bool e = std::find(engineered.begin(), engineered.end(), std::size_t(i)) != engineered.end();
      if (e)
        lo = std::min(lo, (*raw[c])[i]);
      else
        hi = std::max(hi, (*raw[c])[i]);
    }
    margin[c] = lo / hi;
    dominates = dominates && lo > hi;
  }
  const double secs = seconds_since(t0);
  std::string got;
  for (std::size_t i : run.selected) got += std::to_string(i) + " ";
  return {dominates && run.selected == engineered && secs < 30.0,
          fmt("selected [%s], dominance ratios d %.3g s %.3g p %.3g, %.2f s", got.c_str(), margin[0], margin[1],
              margin[2], secs)};
}

void write_hemispheres(const fs::path& dir, int frames, SequenceManifest& m) {
  fs::create_directories(dir / "depth");
  fs::create_directories(dir / "truth");
  const auto track = synthetic::hemisphere_track(frames, 96, 96);
  for (int i = 0; i < frames; ++i) {
    const std::string name = fmt("depth_%02d", i);
    m.depths.push_back(dir / "depth" / (name + ".pfm"));
    m.truths.push_back(dir / "truth" / (name + ".png"));
    write_pfm(synthetic::hemisphere_depth(96, 96, track[static_cast<std::size_t>(i)]), m.depths.back());
    write_mask_png(m.truths.back(), synthetic::disk_mask(96, 96, track[static_cast<std::size_t>(i)]));
  }
}

Outcome localization_end_to_end(const fs::path& work) {
  SequenceManifest m;
  m.id = "hemispheres";
  write_hemispheres(work / "hemi", 10, m);
  const LocalizeRun run = run_eval_iou(m, RunConfig{}, work / "hemi_out", 0);
  double worst = 1.0;
  for (double v : run.iou->per_frame_iou) worst = std::min(worst, v);
  return {run.iou->miou >= 0.9 && run.iou->pass_half,
          fmt("mIoU %.4f (worst frame %.4f), pass_half %s", run.iou->miou, worst, run.iou->pass_half ? "true" : "false")};
}

Outcome iou_exactness() {
  BinaryMask a = BinaryMask::Constant(30, 30, false), b = a, c = a;
  a.block(5, 5, 10, 10).setConstant(true);
  b.block(5, 10, 10, 10).setConstant(true);
  c.block(20, 20, 5, 5).setConstant(true);
  const double same = iou(a, a), disjoint = iou(a, c), half = iou(a, b);
  return {same == 1.0 && disjoint == 0.0 && half == 1.0 / 3.0,
          fmt("identical %.17g, disjoint %.17g, half-shifted %.17g", same, disjoint, half)};
}

Outcome determinism(const fs::path& work) {
  write_frames(work / "det_frames", synthetic::keyframe_sequence({3, 9, 14}, 20, 64));
  SequenceManifest depth;
  depth.id = "det";
  write_hemispheres(work / "det_depth", 6, depth);
  const SequenceManifest frames = ingest_frames((work / "det_frames").string());

  std::vector<std::vector<std::string>> outputs;
  for (unsigned workers : {1u, 4u, 1u, 3u}) {
    const fs::path out = work / fmt("det_out_%zu", outputs.size());
    run_score(frames, RunConfig{}, out, workers);
    run_localize(depth, RunConfig{}, out, workers);
    std::vector<std::string> files{slurp(out / "scores.csv"), slurp(out / "report.json")};
    for (const auto& d : depth.depths) files.push_back(slurp(out / "masks" / (d.stem().string() + ".png")));
    outputs.push_back(std::move(files));
  }
  int differing = 0;
  for (std::size_t r = 1; r < outputs.size(); ++r) differing += outputs[r] != outputs[0];
  const std::size_t n = outputs[0].size();
  return {differing == 0, fmt("%d of 3 reruns differ (workers 1, 4, 1, 3; %zu files each)", differing, n)};
}

}  // namespace

int main() {
  test_support::TempDir work;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"closed-form optimality", closed_form_optimality},
      {"affine invariance", affine_invariance},
      {"worked value", worked_value},
      {"alpha conformance", alpha_conformance},
      {"Hu invariance", hu_invariance},
      {"Sobel ramp", sobel_ramp},
      {"FAST oracle equivalence", fast_oracle},
      {"fusion algebra", fusion_algebra},
      {"synthetic key-frame recovery", [&] { return keyframe_recovery(work.path()); }},
      {"localization end-to-end", [&] { return localization_end_to_end(work.path()); }},
      {"IoU exactness", iou_exactness},
      {"determinism", [&] { return determinism(work.path()); }},
  };

  int failures = 0, conflicts = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    conflicts += !o.pass && o.known_conflict;
    std::printf("%s  %2zu. %s: %s%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str(),
                !o.pass && o.known_conflict ? " [known conflict: stated target inconsistent with the loss definition]"
                                            : "");
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed, %d failed as known conflicts\n", criteria.size() - failures, criteria.size(),
              conflicts);
  return failures == conflicts ? 0 : 1;
}
