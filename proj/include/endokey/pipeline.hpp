#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "endokey/depth.hpp"
#include "endokey/keyframes.hpp"
#include "endokey/localize.hpp"

namespace endokey {

namespace fs = std::filesystem;

/// Every tunable of a run. Defaults match the documented library defaults.
struct RunConfig {
  double sigma = 1.0;
  double canny_sigma = 1.0;
  std::optional<double> canny_low;
  std::optional<double> canny_high;
  double fast_threshold = 20.0 / 255.0;
  int fast_levels = 8;
  double fast_scale_factor = 1.2;
  FeatureChannel channel = FeatureChannel::O3;
  bool log_hu = false;
  int k_scales = 4;
  double alpha = 0.5;
  SelectionPolicy policy;
  int close_radius = 5;
  bool invert_depth_png = false;

  ScoringParams scoring() const;
  LocalizationParams localization() const;
};

/// Overlays flat JSON keys onto `cfg`; unknown keys are rejected.
void apply_config_json(RunConfig& cfg, const nlohmann::json& j);
RunConfig load_config(const fs::path& path);
nlohmann::json config_to_json(const RunConfig& cfg);
void validate(const RunConfig& cfg);

/// Ordered inputs of one sequence; aligned lists share indices.
struct SequenceManifest {
  std::string id;
  std::vector<fs::path> frames;
  std::vector<fs::path> depths;
  std::vector<fs::path> truths;
};

/// Files in a directory (or matching a shell glob) with one of `extensions`, sorted by file name.
std::vector<fs::path> list_files(const std::string& dir_or_glob, const std::vector<std::string>& extensions);

const std::vector<std::string>& frame_extensions();
const std::vector<std::string>& depth_extensions();

/// Lists PNG/JPEG frames; fewer than two is invalid input.
SequenceManifest ingest_frames(const std::string& dir_or_glob);

std::vector<Frame> load_frames(const SequenceManifest& manifest, unsigned workers = 1);

struct ScoreRun {
  ScoreSeries series;
  Variation variation;
  AdaptiveWeights weights;
  std::vector<std::size_t> selected;
};

ScoreRun score_sequence(const SequenceManifest& manifest, const RunConfig& cfg, unsigned workers = 1);

std::string scores_csv(const ScoreRun& run);
nlohmann::json score_report(const SequenceManifest& manifest, const RunConfig& cfg, const ScoreRun& run,
                            const std::string& command);

/// `score`: scores.csv + report.json. `select` additionally writes keyframes.txt.
ScoreRun run_score(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out, unsigned workers = 1);
ScoreRun run_select(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out, unsigned workers = 1);

struct DepthPairResult {
  fs::path pred, gt;
  bool ok = false;
  std::string error_kind;
  std::string error;
  ScaleShift fit;
  double ssi = 0.0;
  double gradient = 0.0;
};

struct DepthEvalRun {
  std::vector<DepthPairResult> pairs;
  std::optional<double> total;
};

/// Per-pair SSI metrics; failing pairs are reported and skipped in the total.
DepthEvalRun depth_eval(const std::vector<fs::path>& preds, const std::vector<fs::path>& gts, const RunConfig& cfg,
                        unsigned workers = 1);
nlohmann::json depth_report(const DepthEvalRun& run, const RunConfig& cfg);
DepthEvalRun run_depth_eval(const std::vector<fs::path>& preds, const std::vector<fs::path>& gts, const RunConfig& cfg,
                            const fs::path& out, unsigned workers = 1);

struct LocalizeRun {
  std::vector<LocalizationResult> results;
  std::optional<IouReport> iou;
};

/// Writes masks/<stem>.png per depth map and localize_report.json.
LocalizeRun run_localize(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out,
                         unsigned workers = 1);

/// As run_localize, then scores regions against truth masks into iou_report.json.
LocalizeRun run_eval_iou(const SequenceManifest& manifest, const RunConfig& cfg, const fs::path& out,
                         unsigned workers = 1);

/// Writes `text` to `path`, creating parent directories.
void write_text(const fs::path& path, const std::string& text);

}  // namespace endokey
