#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svkit/config.hpp"
#include "svkit/errors.hpp"
#include "svkit/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

// Common flags shared by every subcommand; flags beat env beats file.
struct CommonOpts {
  std::string config_path;
  uint64_t seed = 0;
  double scale = 0.0;
  size_t jobs = 0;
  std::string out_dir;
  std::string system;
  std::string scorer;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* scale_opt = nullptr;
  CLI::Option* jobs_opt = nullptr;
  CLI::Option* out_opt = nullptr;
  CLI::Option* system_opt = nullptr;
  CLI::Option* scorer_opt = nullptr;

  void attach(CLI::App* cmd, bool with_system = false, bool with_scorer = false) {
    cmd->add_option("--config", config_path, "experiment config file");
    seed_opt = cmd->add_option("--seed", seed, "master seed");
    scale_opt = cmd->add_option("--scale", scale, "network width scale factor");
    jobs_opt = cmd->add_option("--jobs", jobs, "worker thread cap");
    out_opt = cmd->add_option("--out", out_dir, "work directory");
    if (with_system)
      system_opt = cmd->add_option("--system", system,
                                   "system to run: baseline, triplet, simnet, joint");
    if (with_scorer)
      scorer_opt = cmd->add_option("--scorer", scorer,
                                   "scoring method: plda, cosine, euclidean, simnet");
  }

  svkit::ExperimentConfig resolve() const {
    svkit::ConfigMap map;
    if (!config_path.empty()) map = svkit::parse_config_file(config_path);
    svkit::apply_env(map, svkit::svkit_env());
    char buf[40];
    if (seed_opt && seed_opt->count())
      map.set("run.seed", std::to_string(seed), "flag --seed");
    if (scale_opt && scale_opt->count()) {
      std::snprintf(buf, sizeof(buf), "%.17g", scale);
      map.set("model.scale", buf, "flag --scale");
    }
    if (jobs_opt && jobs_opt->count())
      map.set("run.jobs", std::to_string(jobs), "flag --jobs");
    if (out_opt && out_opt->count()) map.set("run.out", out_dir, "flag --out");
    if (system_opt && system_opt->count()) map.set("train.system", system, "flag --system");
    if (scorer_opt && scorer_opt->count())
      map.set("backend.scorer", scorer, "flag --scorer");
    return svkit::experiment_from(map);
  }
};

std::vector<std::string> default_score_files(const svkit::ExperimentConfig& cfg) {
  const auto paths = svkit::PipelinePaths::under(cfg.out_dir);
  std::vector<std::string> files;
  if (fs::is_directory(paths.scores))
    for (const auto& entry : fs::directory_iterator(paths.scores))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svkit: joint speaker-embedding training and verification toolkit"};
  app.require_subcommand(1);

  CommonOpts gen, feat, train, extract, score, fuse, eval, report, runall;

  auto* cmd_gen = app.add_subcommand("gen-data", "generate the synthetic corpora and trials");
  gen.attach(cmd_gen);

  auto* cmd_feat = app.add_subcommand("featurize", "extract MFCC features for both corpora");
  feat.attach(cmd_feat);

  auto* cmd_train = app.add_subcommand("train", "train one system");
  train.attach(cmd_train, /*with_system=*/true);

  auto* cmd_extract = app.add_subcommand("extract", "extract embeddings with a trained system");
  extract.attach(cmd_extract, /*with_system=*/true);

  auto* cmd_score = app.add_subcommand("score", "fit the backend and score the trial list");
  score.attach(cmd_score, /*with_system=*/true, /*with_scorer=*/true);

  auto* cmd_fuse = app.add_subcommand("fuse", "fuse two score files with equal weights");
  std::vector<std::string> fuse_inputs;
  std::string fuse_out;
  cmd_fuse->add_option("scores", fuse_inputs, "two score files")->expected(2);
  cmd_fuse->add_option("--into", fuse_out, "output score file (default: derived name)");
  fuse.attach(cmd_fuse);

  auto* cmd_eval = app.add_subcommand("evaluate", "print and write the metrics report");
  std::vector<std::string> eval_inputs;
  cmd_eval->add_option("scores", eval_inputs, "score files (default: every scores/*.txt)");
  eval.attach(cmd_eval);

  auto* cmd_report = app.add_subcommand("report", "full report with DET curves and histograms");
  std::vector<std::string> report_inputs;
  cmd_report->add_option("scores", report_inputs,
                         "score files (default: every scores/*.txt)");
  report.attach(cmd_report);

  auto* cmd_runall =
      app.add_subcommand("run-all", "end-to-end comparison grid with two fusions");
  runall.attach(cmd_runall);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_gen->parsed()) {
      svkit::pipeline_gen_data(gen.resolve());
    } else if (cmd_feat->parsed()) {
      svkit::pipeline_featurize(feat.resolve());
    } else if (cmd_train->parsed()) {
      const auto cfg = train.resolve();
      svkit::pipeline_train(cfg, svkit::system_from_config(cfg));
    } else if (cmd_extract->parsed()) {
      const auto cfg = extract.resolve();
      svkit::pipeline_extract(cfg, svkit::system_from_config(cfg));
    } else if (cmd_score->parsed()) {
      const auto cfg = score.resolve();
      svkit::pipeline_score(cfg, svkit::system_from_config(cfg));
    } else if (cmd_fuse->parsed()) {
      const auto cfg = fuse.resolve();
      std::string out = fuse_out;
      if (out.empty()) {
        const auto paths = svkit::PipelinePaths::under(cfg.out_dir);
        out = paths.scores + "/fuse_" + fs::path(fuse_inputs[0]).stem().string() + "+" +
              fs::path(fuse_inputs[1]).stem().string() + ".txt";
      }
      svkit::pipeline_fuse(cfg, fuse_inputs[0], fuse_inputs[1], out);
      std::cout << out << "\n";
    } else if (cmd_eval->parsed()) {
      const auto cfg = eval.resolve();
      const auto files = eval_inputs.empty() ? default_score_files(cfg) : eval_inputs;
      std::cout << svkit::pipeline_evaluate(cfg, files);
    } else if (cmd_report->parsed()) {
      const auto cfg = report.resolve();
      const auto files = report_inputs.empty() ? default_score_files(cfg) : report_inputs;
      std::cout << svkit::pipeline_report(cfg, files);
    } else if (cmd_runall->parsed()) {
      const auto cfg = runall.resolve();
      std::cout << svkit::pipeline_run_all(cfg, std::cout);
    }
  } catch (const svkit::Error& e) {
    std::cerr << e.formatted() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
