#include "endokey/pipeline.hpp"

#include <fnmatch.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "endokey/depth_io.hpp"
#include "endokey/image_io.hpp"

namespace endokey {

using nlohmann::json;

ScoringParams RunConfig::scoring() const {
  ScoringParams p;
  p.channel = channel;
  p.log_hu = log_hu;
  p.sigma = sigma;
  p.orb = {fast_levels, fast_scale_factor, fast_threshold};
  return p;
}

LocalizationParams RunConfig::localization() const {
  LocalizationParams p;
  p.canny = {canny_sigma, canny_low, canny_high};
  p.close_radius = close_radius;
  return p;
}

namespace {

std::optional<double> optional_number(const json& v) {
  if (v.is_null() || (v.is_string() && v.get<std::string>() == "auto")) return std::nullopt;
  return v.get<double>();
}

json optional_to_json(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

std::string channel_name(FeatureChannel c) { return c == FeatureChannel::O3 ? "o3" : "luminance"; }

FeatureChannel parse_channel(const std::string& s) {
  if (s == "o3") return FeatureChannel::O3;
  if (s == "luminance" || s == "gray") return FeatureChannel::Luminance;
  fail(ErrorKind::InvalidParameter, "unknown channel '" + s + "' (expected o3 or luminance)");
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string error_kind_of(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) return to_string(err->kind());
  return "error";
}

}  // namespace

void apply_config_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) fail(ErrorKind::InvalidInput, "config must be a JSON object");
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "sigma") cfg.sigma = v.get<double>();
      else if (key == "canny_sigma") cfg.canny_sigma = v.get<double>();
      else if (key == "canny_low") cfg.canny_low = optional_number(v);
      else if (key == "canny_high") cfg.canny_high = optional_number(v);
      else if (key == "fast_threshold") cfg.fast_threshold = v.get<double>();
      else if (key == "fast_levels") cfg.fast_levels = v.get<int>();
      else if (key == "fast_scale_factor") cfg.fast_scale_factor = v.get<double>();
      else if (key == "channel") cfg.channel = parse_channel(v.get<std::string>());
      else if (key == "hu_transform") {
        const auto mode = v.get<std::string>();
        if (mode != "raw" && mode != "log") fail(ErrorKind::InvalidParameter, "hu_transform must be raw or log");
        cfg.log_hu = mode == "log";
      }
      else if (key == "k_scales") cfg.k_scales = v.get<int>();
      else if (key == "alpha") cfg.alpha = v.get<double>();
      else if (key == "policy") cfg.policy.mode = parse_policy_mode(v.get<std::string>());
      else if (key == "q") cfg.policy.q = v.get<double>();
      else if (key == "k") cfg.policy.k = v.get<std::size_t>();
      else if (key == "threshold") cfg.policy.threshold = v.get<double>();
      else if (key == "close_radius") cfg.close_radius = v.get<int>();
      else if (key == "invert_depth_png") cfg.invert_depth_png = v.get<bool>();
      else fail(ErrorKind::InvalidInput, "unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("config value has the wrong type: ") + e.what());
  }
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::InvalidInput, path.string() + ": " + e.what());
  }
  RunConfig cfg;
  apply_config_json(cfg, j);
  return cfg;
}

json config_to_json(const RunConfig& cfg) {
  return json{
      {"sigma", cfg.sigma},
      {"canny_sigma", cfg.canny_sigma},
      {"canny_low", optional_to_json(cfg.canny_low)},
      {"canny_high", optional_to_json(cfg.canny_high)},
      {"fast_threshold", cfg.fast_threshold},
      {"fast_levels", cfg.fast_levels},
      {"fast_scale_factor", cfg.fast_scale_factor},
      {"channel", channel_name(cfg.channel)},
      {"hu_transform", cfg.log_hu ? "log" : "raw"},
      {"k_scales", cfg.k_scales},
      {"alpha", cfg.alpha},
      {"policy", to_string(cfg.policy.mode)},
      {"q", cfg.policy.q},
      {"k", cfg.policy.k},
      {"threshold", cfg.policy.threshold},
      {"close_radius", cfg.close_radius},
      {"invert_depth_png", cfg.invert_depth_png},
  };
}

void validate(const RunConfig& cfg) {
  auto check = [](bool ok, const char* what) {
    if (!ok) fail(ErrorKind::InvalidParameter, what);
  };
  check(cfg.sigma > 0.0, "sigma must be positive");
  check(cfg.canny_sigma >= 0.0, "canny_sigma must be >= 0");
  check(!cfg.canny_low || *cfg.canny_low >= 0.0, "canny_low must be >= 0");
  check(!cfg.canny_low || !cfg.canny_high || *cfg.canny_low <= *cfg.canny_high, "canny_low must not exceed canny_high");
  check(cfg.fast_threshold >= 0.0, "fast_threshold must be >= 0");
  check(cfg.fast_levels >= 1, "fast_levels must be >= 1");
  check(cfg.fast_scale_factor > 1.0, "fast_scale_factor must be > 1");
  check(cfg.k_scales >= 1, "k_scales must be >= 1");
  check(cfg.close_radius >= 1, "close_radius must be >= 1");
  if (cfg.policy.mode == SelectionPolicy::Mode::Quantile) check(cfg.policy.q > 0.0 && cfg.policy.q < 1.0, "q must lie in (0, 1)");
  if (cfg.policy.mode == SelectionPolicy::Mode::TopK) check(cfg.policy.k >= 1, "k must be >= 1");
}

const std::vector<std::string>& frame_extensions() {
  static const std::vector<std::string> ext{".png", ".jpg", ".jpeg"};
  return ext;
}

const std::vector<std::string>& depth_extensions() {
  static const std::vector<std::string> ext{".pfm", ".png"};
  return ext;
}

std::vector<fs::path> list_files(const std::string& dir_or_glob, const std::vector<std::string>& extensions) {
  const fs::path spec(dir_or_glob);
  fs::path dir = spec;
  std::string pattern = "*";
  if (!fs::is_directory(spec)) {
    dir = spec.has_parent_path() ? spec.parent_path() : fs::path(".");
    pattern = spec.filename().string();
    if (!fs::is_directory(dir)) fail(ErrorKind::InvalidInput, "input path does not exist: " + dir_or_glob);
  }

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (fnmatch(pattern.c_str(), name.c_str(), 0) != 0) continue;
    const std::string ext = lower(entry.path().extension().string());
    if (std::find(extensions.begin(), extensions.end(), ext) == extensions.end()) continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  return files;
}

SequenceManifest ingest_frames(const std::string& dir_or_glob) {
  SequenceManifest m;
  m.frames = list_files(dir_or_glob, frame_extensions());
  if (m.frames.size() < 2)
    fail(ErrorKind::InvalidInput, "need at least 2 PNG/JPEG frames in " + dir_or_glob + ", found " + std::to_string(m.frames.size()));
  const fs::path spec(dir_or_glob);
  m.id = fs::is_directory(spec) ? fs::absolute(spec).lexically_normal().filename().string() : spec.parent_path().filename().string();
  if (m.id.empty()) m.id = fs::absolute(spec).parent_path().filename().string();
  return m;
}

std::vector<Frame> load_frames(const SequenceManifest& manifest, unsigned workers) {
  std::vector<Frame> frames(manifest.frames.size());
  parallel_for(frames.size(), workers, [&](std::size_t i) { frames[i] = load_frame(manifest.frames[i], i); });
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (!same_shape(frames[i].r, frames[0].r))
      fail(ErrorKind::InvalidInput, manifest.frames[i].string() + ": frame dimensions differ from the first frame");
  }
  return frames;
}

ScoreRun score_sequence(const SequenceManifest& manifest, const RunConfig& cfg, unsigned workers) {
  validate(cfg);
  if (manifest.frames.size() < 2) fail(ErrorKind::InvalidInput, "key-frame scoring needs at least 2 frames");
  const ScoringParams params = cfg.scoring();

  std::vector<FrameFeatures> features(manifest.frames.size());
  parallel_for(features.size(), workers, [&](std::size_t i) {
    const Frame f = load_frame(manifest.frames[i], i);
    try {
      features[i] = compute_frame_features(f, params);
    } catch (const Error& e) {
      throw Error(e.kind(), std::string(e.what()) + " [" + manifest.frames[i].filename().string() + "]");
    }
  });

  ScoreRun run;
  run.series = assemble_scores(features, params.log_hu);
  run.variation = score_variation(run.series);
  run.weights = adaptive_weights(run.variation);
  run.series.fused = fuse_scores(run.series, run.weights);
  run.selected = select_keyframes(run.series.fused, cfg.policy);
  return run;
}

std::string scores_csv(const ScoreRun& run) {
  std::ostringstream out;
  out << "index,d_raw,s_raw,p_raw,d_norm,s_norm,p_norm,fused,selected\n";
  const auto& s = run.series;
  std::size_t next_selected = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const bool selected = next_selected < run.selected.size() && run.selected[next_selected] == static_cast<std::size_t>(i);
    if (selected) ++next_selected;
    out << i << ',' << format_double(s.d_raw[i]) << ',' << format_double(s.s_raw[i]) << ','
        << format_double(s.p_raw[i]) << ',' << format_double(s.d_norm[i]) << ',' << format_double(s.s_norm[i])
        << ',' << format_double(s.p_norm[i]) << ',' << format_double(s.fused[i]) << ',' << (selected ? 1 : 0)
        << '\n';
  }
  return out.str();
}

json score_report(const SequenceManifest& manifest, const RunConfig& cfg, const ScoreRun& run,
                  const std::string& command) {
  const auto& s = run.series;
  json frames = json::array();
  std::size_t next_selected = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const bool selected = next_selected < run.selected.size() && run.selected[next_selected] == static_cast<std::size_t>(i);
    if (selected) ++next_selected;
    frames.push_back({
        {"index", i},
        {"file", manifest.frames[static_cast<std::size_t>(i)].filename().string()},
        {"d_raw", s.d_raw[i]},
        {"s_raw", s.s_raw[i]},
        {"p_raw", s.p_raw[i]},
        {"d_norm", s.d_norm[i]},
        {"s_norm", s.s_norm[i]},
        {"p_norm", s.p_norm[i]},
        {"fused", s.fused[i]},
        {"selected", selected},
    });
  }
  return json{
      {"command", command},
      {"sequence", manifest.id},
      {"frame_count", s.size()},
      {"config", config_to_json(cfg)},
      {"variation", {{"d1", run.variation.d1}, {"s1", run.variation.s1}, {"p1", run.variation.p1}}},
      {"weights", {{"w1", run.weights.w1}, {"w2", run.weights.w2}, {"w3", run.weights.w3}}},
      {"frames", frames},
      {"selected", run.selected},
      {"keyframe_count", run.selected.size()},
      {"table", json::array({{{"sequence", manifest.id}, {"key_frames", run.selected.size()}}})},
  };
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  if (!out) fail(ErrorKind::IoError, "failed to write " + path.string());
}

namespace {

ScoreRun write_score_outputs(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out,
                             unsigned workers, const std::string& command) {
  ScoreRun run = score_sequence(manifest, cfg, workers);
  write_text(out / "scores.csv", scores_csv(run));
  write_text(out / "report.json", score_report(manifest, cfg, run, command).dump(2) + "\n");
  return run;
}

}  // namespace

ScoreRun run_score(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out, unsigned workers) {
  return write_score_outputs(manifest, cfg, out, workers, "score");
}

ScoreRun run_select(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out, unsigned workers) {
  ScoreRun run = write_score_outputs(manifest, cfg, out, workers, "select");
  std::ostringstream list;
  for (std::size_t i : run.selected) list << manifest.frames[i].filename().string() << '\n';
  write_text(out / "keyframes.txt", list.str());
  return run;
}

DepthEvalRun depth_eval(const std::vector<fs::path>& preds, const std::vector<fs::path>& gts, const RunConfig& cfg,
                        unsigned workers) {
  validate(cfg);
  if (preds.size() != gts.size())
    fail(ErrorKind::InvalidInput, "prediction and ground-truth lists differ in length (" + std::to_string(preds.size()) +
                                      " vs " + std::to_string(gts.size()) + ")");
  if (preds.empty()) fail(ErrorKind::InvalidInput, "no depth pairs to evaluate");

  DepthEvalRun run;
  run.pairs.resize(preds.size());
  parallel_for(preds.size(), workers, [&](std::size_t i) {
    DepthPairResult& r = run.pairs[i];
    r.pred = preds[i];
    r.gt = gts[i];
    try {
      const InverseDepthMap pred = read_depth(preds[i], cfg.invert_depth_png);
      const InverseDepthMap gt = read_depth(gts[i], cfg.invert_depth_png);
      r.fit = fit_scale_shift(pred, gt);
      r.ssi = ssi_loss(pred, gt);
      r.gradient = gradient_matching_loss(pred, gt, cfg.k_scales);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error_kind = error_kind_of(e);
      r.error = e.what();
    }
  });

  double acc = 0.0;
  std::size_t ok = 0;
  for (const auto& r : run.pairs) {
    if (!r.ok) continue;
    acc += r.ssi + cfg.alpha * r.gradient;
    ++ok;
  }
  if (ok > 0) run.total = acc / static_cast<double>(ok);
  return run;
}

json depth_report(const DepthEvalRun& run, const RunConfig& cfg) {
  json pairs = json::array();
  std::size_t failed = 0;
  for (const auto& r : run.pairs) {
    json item{{"pred", r.pred.filename().string()}, {"gt", r.gt.filename().string()}, {"ok", r.ok}};
    if (r.ok) {
      item["s"] = r.fit.s;
      item["t"] = r.fit.t;
      item["ssi_loss"] = r.ssi;
      item["gradient_loss"] = r.gradient;
      item["combined"] = r.ssi + cfg.alpha * r.gradient;
    } else {
      ++failed;
      item["error_kind"] = r.error_kind;
      item["error"] = r.error;
    }
    pairs.push_back(item);
  }
  return json{
      {"command", "depth-eval"},
      {"alpha", cfg.alpha},
      {"k_scales", cfg.k_scales},
      {"pairs", pairs},
      {"evaluated", run.pairs.size() - failed},
      {"failed", failed},
      {"total_loss", run.total ? json(*run.total) : json(nullptr)},
  };
}

DepthEvalRun run_depth_eval(const std::vector<fs::path>& preds, const std::vector<fs::path>& gts, const RunConfig& cfg,
                            const fs::path& out, unsigned workers) {
  DepthEvalRun run = depth_eval(preds, gts, cfg, workers);
  write_text(out / "depth_report.json", depth_report(run, cfg).dump(2) + "\n");
  return run;
}

namespace {

fs::path mask_path(const fs::path& out, const fs::path& depth) { return out / "masks" / (depth.stem().string() + ".png"); }

LocalizeRun localize_sequence(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out,
                              unsigned workers) {
  validate(cfg);
  if (manifest.depths.empty()) fail(ErrorKind::InvalidInput, "no depth maps given (--depth)");
  const LocalizationParams params = cfg.localization();

  LocalizeRun run;
  run.results.resize(manifest.depths.size());
  parallel_for(manifest.depths.size(), workers, [&](std::size_t i) {
    run.results[i] = localize(read_depth(manifest.depths[i], cfg.invert_depth_png), params);
  });

  fs::create_directories(out / "masks");
  for (std::size_t i = 0; i < run.results.size(); ++i) write_mask_png(mask_path(out, manifest.depths[i]), run.results[i].region);
  return run;
}

json localize_frames_json(const SequenceManifest& manifest, const LocalizeRun& run) {
  json frames = json::array();
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    const auto& r = run.results[i];
    json item{
        {"index", i},
        {"depth", manifest.depths[i].filename().string()},
        {"mask", (fs::path("masks") / (manifest.depths[i].stem().string() + ".png")).string()},
        {"edge_pixels", r.edges.count()},
        {"region_pixels", r.region.count()},
        {"empty_edges", r.empty_edges},
        {"open_contour", r.open_contour},
    };
    if (run.iou) {
      item["truth"] = manifest.truths[i].filename().string();
      item["iou"] = run.iou->per_frame_iou[i];
    }
    frames.push_back(item);
  }
  return frames;
}

}  // namespace

LocalizeRun run_localize(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out, unsigned workers) {
  LocalizeRun run = localize_sequence(manifest, cfg, out, workers);
  const json report{{"command", "localize"},
                    {"sequence", manifest.id},
                    {"config", config_to_json(cfg)},
                    {"frames", localize_frames_json(manifest, run)}};
  write_text(out / "localize_report.json", report.dump(2) + "\n");
  return run;
}

LocalizeRun run_eval_iou(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out, unsigned workers) {
  if (manifest.truths.empty()) fail(ErrorKind::InvalidInput, "no ground-truth masks given (--truth)");
  if (manifest.truths.size() != manifest.depths.size())
    fail(ErrorKind::InvalidInput, "depth maps and truth masks differ in count (" + std::to_string(manifest.depths.size()) +
                                      " vs " + std::to_string(manifest.truths.size()) + ")");

  LocalizeRun run = localize_sequence(manifest, cfg, out, workers);
  std::vector<double> scores(run.results.size());
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    const BinaryMask truth = read_mask_png(manifest.truths[i]);
    if (!same_shape(truth, run.results[i].region))
      fail(ErrorKind::InvalidInput, manifest.truths[i].string() + ": truth mask size differs from depth map");
    scores[i] = iou(run.results[i].region, truth);
  }
  run.iou = miou_from_scores(std::move(scores));

  const json report{{"command", "eval-iou"},
                    {"sequence", manifest.id},
                    {"config", config_to_json(cfg)},
                    {"frames", localize_frames_json(manifest, run)},
                    {"per_frame_iou", run.iou->per_frame_iou},
                    {"miou", run.iou->miou},
                    {"pass_half", run.iou->pass_half}};
  write_text(out / "iou_report.json", report.dump(2) + "\n");
  return run;
}

}  // namespace endokey
