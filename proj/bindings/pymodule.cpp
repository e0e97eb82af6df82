// Python bindings for the core operations: feature extraction, the
// experiment pipeline, the scoring backend, and evaluation metrics.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/backend.hpp"
#include "svkit/config.hpp"
#include "svkit/errors.hpp"
#include "svkit/features.hpp"
#include "svkit/metrics.hpp"
#include "svkit/pipeline.hpp"

namespace py = pybind11;

namespace {

svkit::ExperimentConfig config_from_dict(const py::dict& d) {
  svkit::ConfigMap map;
  for (const auto& item : d)
    map.set(py::cast<std::string>(py::str(item.first)),
            py::cast<std::string>(py::str(item.second)), "python");
  return svkit::experiment_from(map);
}

std::vector<std::vector<double>> rows_of(const svkit::FeatureMatrix& m) {
  std::vector<std::vector<double>> rows(m.rows);
  for (size_t r = 0; r < m.rows; ++r)
    rows[r].assign(m.row(r), m.row(r) + m.cols);
  return rows;
}

svkit::ScoreSet set_of(const std::vector<double>& targets,
                       const std::vector<double>& nontargets) {
  svkit::ScoreSet set;
  set.system = "py";
  size_t i = 0;
  for (double s : targets)
    set.trials.push_back({"e" + std::to_string(i++), "t", s, true, true});
  for (double s : nontargets)
    set.trials.push_back({"e" + std::to_string(i++), "t", s, false, true});
  return set;
}

std::vector<std::string> score_paths_or_default(const svkit::ExperimentConfig& cfg,
                                                std::vector<std::string> paths) {
  if (!paths.empty()) return paths;
  const auto dir = svkit::PipelinePaths::under(cfg.out_dir).scores;
  if (std::filesystem::is_directory(dir))
    for (const auto& entry : std::filesystem::directory_iterator(dir))
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  return paths;
}

const svkit::SystemSpec& grid_system(const std::vector<svkit::SystemSpec>& grid,
                                     const std::string& name) {
  for (const auto& spec : grid)
    if (spec.name == name) return spec;
  throw svkit::Error(svkit::ErrorCategory::kUsage, "unknown system '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_svkit_core, m) {
  m.doc() = "Speaker verification toolkit core";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const svkit::Error& e) {
      PyErr_SetString(PyExc_RuntimeError, e.formatted().c_str());
    }
  });

  m.def(
      "mfcc",
      [](const std::vector<double>& samples, int sample_rate) {
        svkit::FeatureConfig fc;
        fc.sample_rate = sample_rate;
        return rows_of(svkit::mfcc(samples, fc));
      },
      py::arg("samples"), py::arg("sample_rate") = 8000,
      "Raw MFCC frames as a list of 23-coefficient rows.");

  m.def(
      "featurize",
      [](const std::vector<double>& samples, int sample_rate) {
        svkit::FeatureConfig fc;
        fc.sample_rate = sample_rate;
        return rows_of(svkit::featurize(samples, fc, "python"));
      },
      py::arg("samples"), py::arg("sample_rate") = 8000,
      "MFCC, voice activity detection, and sliding mean normalization.");

  m.def(
      "eer",
      [](const std::vector<double>& targets, const std::vector<double>& nontargets) {
        return svkit::eer(svkit::det_curve(set_of(targets, nontargets)));
      },
      py::arg("targets"), py::arg("nontargets"), "Equal error rate in percent.");

  m.def(
      "min_dcf16",
      [](const std::vector<double>& targets, const std::vector<double>& nontargets) {
        return svkit::min_dcf16(svkit::det_curve(set_of(targets, nontargets)));
      },
      py::arg("targets"), py::arg("nontargets"),
      "Minimum normalized detection cost averaged over P_target 0.01 and 0.005.");

  m.def(
      "det_curve",
      [](const std::vector<double>& targets, const std::vector<double>& nontargets) {
        std::vector<std::tuple<double, double, double>> pts;
        for (const auto& p : svkit::det_curve(set_of(targets, nontargets)).points)
          pts.emplace_back(p.threshold, p.p_miss, p.p_fa);
        return pts;
      },
      py::arg("targets"), py::arg("nontargets"),
      "(threshold, p_miss, p_fa) sweep points in ascending threshold order.");

  m.def("probit", &svkit::probit, py::arg("p"),
        "Inverse standard normal CDF on (0, 1).");

  py::class_<svkit::Backend>(m, "Backend", "Fitted center + LDA + length-norm + PLDA chain")
      .def("transform", &svkit::Backend::transform, py::arg("embedding"))
      .def("score", &svkit::Backend::score, py::arg("enroll"), py::arg("test"))
      .def("save", &svkit::Backend::save, py::arg("path"))
      .def_static("load", &svkit::Backend::load, py::arg("path"));

  m.def(
      "fit_backend",
      [](const std::vector<std::tuple<std::string, std::string, std::vector<double>>>& train,
         size_t lda_dim, size_t plda_iterations) {
        std::vector<svkit::Embedding> embs;
        embs.reserve(train.size());
        for (const auto& [utt, spk, vec] : train) {
          svkit::Embedding e;
          e.utterance_id = utt;
          e.speaker_id = spk;
          e.vec = vec;
          embs.push_back(std::move(e));
        }
        return svkit::fit_backend(embs, lda_dim, plda_iterations);
      },
      py::arg("train"), py::arg("lda_dim"), py::arg("plda_iterations") = 10,
      "Fit the scoring backend on (utterance, speaker, vector) rows.");

  m.def(
      "system_names",
      [](const py::dict& d) {
        std::vector<std::string> names;
        for (const auto& spec : svkit::system_grid(config_from_dict(d)))
          names.push_back(spec.name);
        return names;
      },
      py::arg("config"), "Names of the trained systems in the comparison grid.");

  m.def(
      "gen_data", [](const py::dict& d) { svkit::pipeline_gen_data(config_from_dict(d)); },
      py::arg("config"), "Generate the synthetic train and eval corpora plus trials.");

  m.def(
      "featurize_corpus",
      [](const py::dict& d) { svkit::pipeline_featurize(config_from_dict(d)); },
      py::arg("config"), "Write per-utterance feature caches for both corpora.");

  m.def(
      "train_system",
      [](const py::dict& d, const std::string& name) {
        const auto cfg = config_from_dict(d);
        svkit::pipeline_train(cfg, grid_system(svkit::system_grid(cfg), name));
      },
      py::arg("config"), py::arg("system"), "Train one system from the grid.");

  m.def(
      "extract_embeddings",
      [](const py::dict& d, const std::string& name) {
        const auto cfg = config_from_dict(d);
        svkit::pipeline_extract(cfg, grid_system(svkit::system_grid(cfg), name));
      },
      py::arg("config"), py::arg("system"),
      "Extract train and eval embeddings for a trained system.");

  m.def(
      "score_system",
      [](const py::dict& d, const std::string& name) {
        const auto cfg = config_from_dict(d);
        svkit::pipeline_score(cfg, grid_system(svkit::system_grid(cfg), name));
      },
      py::arg("config"), py::arg("system"),
      "Fit the backend and score the trial list for one system.");

  m.def(
      "fuse_files",
      [](const py::dict& d, const std::string& a, const std::string& b,
         const std::string& out) { svkit::pipeline_fuse(config_from_dict(d), a, b, out); },
      py::arg("config"), py::arg("a"), py::arg("b"), py::arg("out"),
      "Equal-weight fusion of two score files.");

  m.def(
      "evaluate",
      [](const py::dict& d, std::vector<std::string> paths) {
        const auto cfg = config_from_dict(d);
        return svkit::pipeline_evaluate(cfg, score_paths_or_default(cfg, std::move(paths)));
      },
      py::arg("config"), py::arg("score_files") = std::vector<std::string>{},
      "Metric table for the given score files (default: every score in the work dir).");

  m.def(
      "report",
      [](const py::dict& d, std::vector<std::string> paths) {
        const auto cfg = config_from_dict(d);
        return svkit::pipeline_report(cfg, score_paths_or_default(cfg, std::move(paths)));
      },
      py::arg("config"), py::arg("score_files") = std::vector<std::string>{},
      "Evaluate plus DET curves and score histograms on disk.");

  m.def(
      "run_all",
      [](const py::dict& d) {
        std::ostringstream log;
        return svkit::pipeline_run_all(config_from_dict(d), log);
      },
      py::arg("config"),
      "Full pipeline: data, features, the system grid, fusions, and the report.");
}
