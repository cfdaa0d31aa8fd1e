#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "endokey/pipeline.hpp"

namespace {

using namespace endokey;

struct Options {
  std::string input, depth, truth, config, out = "out";
  std::optional<std::string> policy;
  std::optional<double> q, threshold, alpha;
  std::optional<std::size_t> k;
  std::optional<int> scales;
  unsigned workers = 1;
};

RunConfig resolve_config(const Options& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (o.policy) cfg.policy.mode = parse_policy_mode(*o.policy);
  if (o.q) cfg.policy.q = *o.q;
  if (o.k) cfg.policy.k = *o.k;
  if (o.threshold) cfg.policy.threshold = *o.threshold;
  if (o.alpha) cfg.alpha = *o.alpha;
  if (o.scales) cfg.k_scales = *o.scales;
  validate(cfg);
  return cfg;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorKind::InvalidInput, std::string(flag) + " is required");
}

SequenceManifest depth_manifest(const Options& o) {
  require(o.depth, "--depth");
  SequenceManifest m;
  m.depths = list_files(o.depth, depth_extensions());
  if (m.depths.empty()) fail(ErrorKind::InvalidInput, "no depth maps found in " + o.depth);
  m.id = fs::absolute(fs::path(o.depth)).lexically_normal().filename().string();
  if (!o.truth.empty()) m.truths = list_files(o.truth, {".png"});
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Key-frame scoring, depth-map metrics and depth-driven localization for endoscopic sequences"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config with flat RunConfig keys");
    sub->add_option("--out", o.out, "Output directory")->capture_default_str();
    sub->add_option("--workers", o.workers, "Worker threads (0 = all cores)")->capture_default_str();
  };
  auto selection = [&](CLI::App* sub) {
    sub->add_option("--policy", o.policy, "quantile | top_k | absolute");
    sub->add_option("--q", o.q, "Quantile for the quantile policy");
    sub->add_option("--k", o.k, "Frame count for the top_k policy");
    sub->add_option("--threshold", o.threshold, "Fused-score threshold for the absolute policy");
  };

  CLI::App* score = app.add_subcommand("score", "Score frames and write scores.csv + report.json");
  score->add_option("--input", o.input, "Frame directory or glob")->required();
  common(score);
  selection(score);

  CLI::App* select = app.add_subcommand("select", "As score, plus keyframes.txt with the selected frames");
  select->add_option("--input", o.input, "Frame directory or glob")->required();
  common(select);
  selection(select);

  CLI::App* depth_eval = app.add_subcommand("depth-eval", "Scale/shift-invariant metrics for predicted inverse depth");
  depth_eval->add_option("--depth", o.depth, "Predicted depth maps (PFM or 16-bit PNG)")->required();
  depth_eval->add_option("--truth", o.truth, "Ground-truth depth maps, aligned by sorted name")->required();
  depth_eval->add_option("--alpha", o.alpha, "Gradient-matching weight");
  depth_eval->add_option("--scales", o.scales, "Number of gradient-matching scales");
  common(depth_eval);

  CLI::App* localize = app.add_subcommand("localize", "Polyp region masks from depth maps");
  localize->add_option("--depth", o.depth, "Depth map directory or glob")->required();
  common(localize);

  CLI::App* eval_iou = app.add_subcommand("eval-iou", "Localize and score against ground-truth masks");
  eval_iou->add_option("--depth", o.depth, "Depth map directory or glob")->required();
  eval_iou->add_option("--truth", o.truth, "Ground-truth mask PNGs (foreground 255)")->required();
  common(eval_iou);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    const RunConfig cfg = resolve_config(o);
    const fs::path out(o.out);

    if (score->parsed() || select->parsed()) {
      const SequenceManifest m = ingest_frames(o.input);
      const ScoreRun run = score->parsed() ? run_score(m, cfg, out, o.workers) : run_select(m, cfg, out, o.workers);
      std::cout << m.id << ": " << run.selected.size() << " key frames of " << m.frames.size() << " -> "
                << (out / "report.json").string() << '\n';
      return 0;
    }

    if (depth_eval->parsed()) {
      const auto preds = list_files(o.depth, depth_extensions());
      const auto gts = list_files(o.truth, depth_extensions());
      const DepthEvalRun run = run_depth_eval(preds, gts, cfg, out, o.workers);
      for (const auto& p : run.pairs)
        if (!p.ok) std::cerr << p.pred.filename().string() << ": " << p.error << '\n';
      if (!run.total) {
        std::cerr << "no pair could be evaluated\n";
        return exit_code(ErrorKind::DegenerateInput);
      }
      std::cout << "total_loss " << *run.total << " -> " << (out / "depth_report.json").string() << '\n';
      return 0;
    }

    SequenceManifest m = depth_manifest(o);
    if (localize->parsed()) {
      run_localize(m, cfg, out, o.workers);
      std::cout << m.depths.size() << " masks -> " << (out / "masks").string() << '\n';
      return 0;
    }

    const LocalizeRun run = run_eval_iou(m, cfg, out, o.workers);
    std::cout << m.id << ": mIoU " << run.iou->miou << " (> 0.5: " << (run.iou->pass_half ? "yes" : "no") << ")\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io-error: " << e.what() << '\n';
    return 3;
  }
}
