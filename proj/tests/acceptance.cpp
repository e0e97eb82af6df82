// Acceptance gate: one check per criterion, each printing a single
// PASS/FAIL verdict line. Run with a criterion number 1..8, "all", or
// "make-goldens <dir>" to regenerate the frozen format fixtures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "svkit/backend.hpp"
#include "svkit/checkpoint.hpp"
#include "svkit/config.hpp"
#include "svkit/corpus.hpp"
#include "svkit/features.hpp"
#include "svkit/losses.hpp"
#include "svkit/metrics.hpp"
#include "svkit/pipeline.hpp"
#include "svkit/rng.hpp"
#include "svkit/simnet.hpp"
#include "svkit/tensor.hpp"
#include "svkit/xvector.hpp"
#include "testutil.hpp"

using svkit::Embedding;
using svkit::Mode;
using svkit::Rng;
using svkit::ScoredTrial;
using svkit::ScoreSet;
using svkit::Tape;
using svkit::Tensor;
using testutil::check_gradients;
using testutil::random_tensor;

namespace {

struct Outcome {
  bool ok = true;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      std::printf("  fail: %s\n", what.c_str());
      ok = false;
    }
  }
};

double elapsed_s(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Gradient correctness: every differentiable op, then both networks.

bool criterion_gradients() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(11);
  double worst_op = 0.0;

  const auto op = [&](const char* name, std::vector<Tensor> leaves,
                      const std::function<Tensor(Tape&)>& fn) {
    const auto r = check_gradients(std::move(leaves), fn);
    worst_op = std::max(worst_op, r.max_rel_err);
    out.require(r.max_rel_err < 1e-4,
                std::string(name) + " rel err " + std::to_string(r.max_rel_err));
  };

  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({3, 4}, rng);
  Tensor pos = random_tensor({3, 4}, rng);
  for (auto& v : pos.value()) v = std::abs(v) + 0.5;
  Tensor off = random_tensor({3, 4}, rng);
  for (auto& v : off.value())
    if (std::abs(v) < 0.05) v = 0.2;

  op("add", {a, b}, [&](Tape& t) { return t.sum(t.square(t.add(a, b))); });
  op("sub", {a, b}, [&](Tape& t) { return t.sum(t.square(t.sub(a, b))); });
  op("mul", {a, b}, [&](Tape& t) { return t.sum(t.square(t.mul(a, b))); });
  op("add_const", {a}, [&](Tape& t) { return t.sum(t.square(t.add(a, 1.5))); });
  op("scale", {a}, [&](Tape& t) { return t.sum(t.square(t.scale(a, -0.7))); });
  op("relu", {off}, [&](Tape& t) { return t.sum(t.square(t.relu(off))); });
  op("sigmoid", {a}, [&](Tape& t) { return t.sum(t.square(t.sigmoid(a))); });
  op("tanh", {a}, [&](Tape& t) { return t.sum(t.square(t.tanh(a))); });
  op("exp", {a}, [&](Tape& t) { return t.sum(t.square(t.exp(t.scale(a, 0.3)))); });
  op("log", {pos}, [&](Tape& t) { return t.sum(t.square(t.log(pos))); });
  op("sqrt", {pos}, [&](Tape& t) { return t.sum(t.square(t.sqrt(pos))); });
  op("square", {a}, [&](Tape& t) { return t.sum(t.square(t.square(a))); });

  Tensor mx = random_tensor({4, 3}, rng);
  Tensor mw = random_tensor({3, 5}, rng);
  Tensor mb = random_tensor({5}, rng);
  op("matmul", {mx, mw}, [&](Tape& t) { return t.sum(t.square(t.matmul(mx, mw))); });
  op("linear", {mx, mw, mb}, [&](Tape& t) { return t.sum(t.square(t.linear(mx, mw, mb))); });

  Tensor c5 = random_tensor({5, 4}, rng);
  op("concat", {a, c5}, [&](Tape& t) {
    Tensor rows = t.concat({a, c5}, 0);
    Tensor wide = t.concat({rows, t.scale(rows, -0.5)}, 1);
    return t.sum(t.square(wide));
  });
  op("slice", {c5}, [&](Tape& t) { return t.sum(t.square(t.slice(c5, 0, 1, 4))); });
  op("gather_rows", {c5},
     [&](Tape& t) { return t.sum(t.square(t.gather_rows(c5, {4, 0, 4, 2}))); });
  op("reshape", {c5}, [&](Tape& t) { return t.sum(t.square(t.reshape(c5, {2, 10}))); });

  op("sum", {a}, [&](Tape& t) { return t.square(t.sum(a)); });
  op("mean", {a}, [&](Tape& t) { return t.square(t.mean(a)); });
  op("sum_axis", {a}, [&](Tape& t) {
    return t.add(t.sum(t.square(t.sum(a, 0))), t.sum(t.square(t.sum(a, 1))));
  });
  op("mean_axis", {a}, [&](Tape& t) {
    return t.add(t.sum(t.square(t.mean(a, 0))), t.sum(t.square(t.mean(a, 1))));
  });
  op("stddev_axis", {a}, [&](Tape& t) {
    return t.add(t.sum(t.square(t.stddev(a, 0))), t.sum(t.square(t.stddev(a, 1))));
  });

  Tensor bx = random_tensor({6, 3}, rng);
  Tensor bgamma = random_tensor({3}, rng);
  for (auto& v : bgamma.value()) v = std::abs(v) + 0.5;
  Tensor bbeta = random_tensor({3}, rng);
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    svkit::BatchNormState state(3);
    state.running_mean = {0.1, -0.2, 0.3};
    state.running_var = {1.5, 0.7, 2.0};
    op(mode == Mode::kTrain ? "batchnorm_train" : "batchnorm_eval", {bx, bgamma, bbeta},
       [&](Tape& t) { return t.sum(t.square(t.batchnorm(bx, bgamma, bbeta, state, mode))); });
  }

  Tensor logits = random_tensor({5, 4}, rng);
  Tensor z = random_tensor({6}, rng);
  op("cross_entropy", {logits},
     [&](Tape& t) { return t.cross_entropy(logits, {0, 3, 1, 1, 2}); });
  op("bce_with_logits", {z},
     [&](Tape& t) { return t.bce_with_logits(z, {1, 0, 1, 0, 1, 0}); });
  op("rows_l2_normalize", {a}, [&](Tape& t) {
    Tensor y = t.rows_l2_normalize(a);
    return t.sum(t.mul(y, t.exp(t.scale(y, 0.3))));
  });

  // Full x-vector training path at scale_factor 0.01.
  svkit::XVectorConfig xcfg;
  xcfg.feat_dim = 5;
  xcfg.num_speakers = 3;
  xcfg.scale_factor = 0.01;
  Rng net_rng(21);
  svkit::XVectorNet xnet(xcfg, net_rng);
  Tensor f1 = random_tensor({18, 5}, rng);
  Tensor f2 = random_tensor({21, 5}, rng);
  const std::vector<int> labels = {0, 2};
  auto xfn = [&](Tape& t) {
    Tensor p1 = xnet.stats_pool(t, xnet.forward_frames(t, f1, Mode::kTrain));
    Tensor p2 = xnet.stats_pool(t, xnet.forward_frames(t, f2, Mode::kTrain));
    auto seg = xnet.forward_pooled(t, t.concat({p1, p2}, 0), Mode::kTrain, false);
    Tensor ce = t.cross_entropy(seg.logits, labels);
    return t.add(ce, t.scale(t.sum(t.square(seg.emb_a)), 0.01));
  };
  std::vector<Tensor> xleaves = {f1, f2};
  for (auto& p : xnet.params().params) xleaves.push_back(p.tensor);
  const auto xres = check_gradients(xleaves, xfn);
  out.require(xres.max_rel_err < 1e-3,
              "xvector end-to-end rel err " + std::to_string(xres.max_rel_err));

  // Full similarity network at scale_factor 0.01.
  svkit::SimNetConfig scfg;
  scfg.input_dim = 5;
  scfg.scale_factor = 0.01;
  Rng sim_rng(22);
  svkit::SimilarityNet snet(scfg, sim_rng);
  Tensor x1 = random_tensor({3, 5}, rng);
  Tensor x2 = random_tensor({3, 5}, rng);
  auto sfn = [&](Tape& t) {
    return t.bce_with_logits(snet.pair_logits(t, x1, x2, Mode::kTrain), {1.0, 0.0, 1.0});
  };
  std::vector<Tensor> sleaves = {x1, x2};
  for (auto& p : snet.params().params) sleaves.push_back(p.tensor);
  const auto sres = check_gradients(sleaves, sfn);
  out.require(sres.max_rel_err < 1e-3,
              "simnet end-to-end rel err " + std::to_string(sres.max_rel_err));

  const double secs = elapsed_s(t0);
  out.require(secs < 60.0, "runtime " + std::to_string(secs) + " s exceeds 60 s");
  std::printf("  per-op worst rel err %.3g, nets %.3g / %.3g, %.1f s\n", worst_op,
              xres.max_rel_err, sres.max_rel_err, secs);
  return out.ok;
}

// ---------------------------------------------------------------------------
// 2. Metric oracles: brute-force threshold recount vs eer()/min_dcf16().

struct OraclePoint {
  double threshold, p_miss, p_fa;
};

std::vector<OraclePoint> oracle_points(const ScoreSet& set) {
  std::set<double> distinct;
  double top = -1e300;
  size_t nt = 0, nn = 0;
  for (const auto& t : set.trials) {
    distinct.insert(t.score);
    top = std::max(top, t.score);
    (t.target ? nt : nn) += 1;
  }
  std::vector<double> thresholds(distinct.begin(), distinct.end());
  thresholds.push_back(top + 1.0);
  std::vector<OraclePoint> out;
  for (double th : thresholds) {
    size_t miss = 0, fa = 0;
    for (const auto& t : set.trials) {
      if (t.target && t.score < th) ++miss;
      if (!t.target && t.score >= th) ++fa;
    }
    out.push_back({th, static_cast<double>(miss) / static_cast<double>(nt),
                   static_cast<double>(fa) / static_cast<double>(nn)});
  }
  return out;
}

double oracle_eer(const ScoreSet& set) {
  const auto pts = oracle_points(set);
  for (size_t i = 0; i < pts.size(); ++i) {
    const double f = pts[i].p_miss - pts[i].p_fa;
    if (f > 0.0) {
      const double f0 = pts[i - 1].p_miss - pts[i - 1].p_fa;
      const double a = -f0 / (f - f0);
      return 100.0 * (pts[i - 1].p_miss + a * (pts[i].p_miss - pts[i - 1].p_miss));
    }
    if (f == 0.0) return 100.0 * pts[i].p_miss;
  }
  return 100.0;
}

double oracle_min_dcf(const ScoreSet& set) {
  const auto pts = oracle_points(set);
  double sum = 0.0;
  for (const double pt : {0.01, 0.005}) {
    double best = 1e300;
    for (const auto& p : pts)
      best = std::min(best, (p.p_miss * pt + p.p_fa * (1.0 - pt)) / std::min(pt, 1.0 - pt));
    sum += best;
  }
  return sum / 2.0;
}

ScoreSet random_set(Rng& rng, size_t targets, size_t nontargets, double sep, int levels) {
  ScoreSet set;
  set.system = "r";
  size_t i = 0;
  const auto q = [&](double v) {
    return levels > 0 ? std::round(v * levels) / levels : v;
  };
  for (size_t k = 0; k < targets; ++k)
    set.trials.push_back({"e" + std::to_string(i++), "t", q(sep + rng.normal()), true, true});
  for (size_t k = 0; k < nontargets; ++k)
    set.trials.push_back({"e" + std::to_string(i++), "t", q(rng.normal()), false, true});
  return set;
}

bool criterion_metric_oracles() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(202);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const size_t targets = 1 + rng.uniform_int(200);
    const size_t nontargets = 1 + rng.uniform_int(298);
    const int levels = (k % 3 == 0) ? 3 : 0;
    const auto set = random_set(rng, targets, nontargets, rng.uniform(0.0, 3.0), levels);
    const auto curve = svkit::det_curve(set);
    const double de = std::abs(svkit::eer(curve) - oracle_eer(set));
    const double dd = std::abs(svkit::min_dcf16(curve) - oracle_min_dcf(set));
    worst = std::max({worst, de, dd});
    out.require(de < 1e-12, "eer mismatch " + std::to_string(de) + " at set " + std::to_string(k));
    out.require(dd < 1e-12, "dcf mismatch " + std::to_string(dd) + " at set " + std::to_string(k));
  }
  const double secs = elapsed_s(t0);
  out.require(secs < 30.0, "runtime " + std::to_string(secs) + " s exceeds 30 s");
  std::printf("  100 sets, worst |diff| %.3g, %.1f s\n", worst, secs);
  return out.ok;
}

// ---------------------------------------------------------------------------
// 3. PLDA recovery from a known two-covariance model.

double frob_rel(const std::vector<double>& got, const std::vector<double>& want) {
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < want.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num / den);
}

bool criterion_plda_recovery() {
  Outcome out;
  Rng rng(303);
  std::vector<Embedding> embs;
  for (int s = 0; s < 200; ++s) {
    const double y0 = 2.0 * rng.normal();
    const double y1 = 1.0 * rng.normal();
    for (int u = 0; u < 10; ++u) {
      Embedding e;
      e.speaker_id = "s" + std::to_string(s);
      e.utterance_id = e.speaker_id + "_u" + std::to_string(u);
      e.vec = {y0 + rng.normal(), y1 + rng.normal()};
      embs.push_back(std::move(e));
    }
  }
  const auto model = svkit::fit_plda(embs, 15);
  const double rb = frob_rel(model.between, {4.0, 0.0, 0.0, 1.0});
  const double rw = frob_rel(model.within, {1.0, 0.0, 0.0, 1.0});
  out.require(rb < 0.15, "between-cov rel err " + std::to_string(rb));
  out.require(rw < 0.15, "within-cov rel err " + std::to_string(rw));

  svkit::PldaModel one;
  one.dim = 1;
  one.mu = {0.0};
  one.between = {1.0};
  one.within = {1.0};
  one.prepare();
  const double want = 1.0 / 6.0 + std::log(2.0 / std::sqrt(3.0));
  const double got = svkit::plda_score(one, {1.0}, {1.0});
  out.require(std::abs(got - want) < 1e-10, "closed-form diff " + std::to_string(got - want));
  std::printf("  B rel %.3f, W rel %.3f, 1-d closed-form diff %.3g\n", rb, rw,
              std::abs(got - want));
  return out.ok;
}

// ---------------------------------------------------------------------------
// 4. Loss identities.

bool criterion_loss_identities() {
  Outcome out;

  // Equal anchor-positive and anchor-negative distances leave exactly the
  // margin inside the hinge.
  {
    Tape tape;
    svkit::TripletBatch batch;
    batch.anchors = Tensor::from({2, 2}, {0.0, 0.0, 1.0, 1.0});
    batch.positives = Tensor::from({2, 2}, {1.0, 0.0, 1.0, 3.0});
    batch.negatives = Tensor::from({2, 2}, {0.0, 1.0, 3.0, 1.0});
    const double loss = svkit::triplet_loss(tape, batch, 0.8).item();
    out.require(std::abs(loss - 0.8) < 1e-12, "triplet at equal distances " + std::to_string(loss));
  }

  // Joint combination equals the hand-weighted sum at (1, 0.1, 0.3).
  {
    Tape tape;
    Tensor ce = Tensor::scalar(1.5);
    Tensor trip = Tensor::scalar(0.25);
    Tensor sim = Tensor::scalar(0.75);
    svkit::LossWeights w;
    w.alpha = 1.0;
    w.beta = 0.1;
    w.gamma = 0.3;
    const double got = svkit::joint_loss(tape, ce, trip, sim, w).item();
    const double want = 1.0 * 1.5 + 0.1 * 0.25 + 0.3 * 0.75;
    out.require(std::abs(got - want) < 1e-12, "joint loss diff " + std::to_string(got - want));
  }

  // Uniform logits cost exactly ln N.
  double worst = 0.0;
  for (size_t n = 2; n <= 64; ++n) {
    Tape tape;
    Tensor logits = Tensor::zeros({3, n});
    const std::vector<int> labels = {0, static_cast<int>(n / 2), static_cast<int>(n - 1)};
    const double ce = svkit::cross_entropy_loss(tape, logits, labels).item();
    worst = std::max(worst, std::abs(ce - std::log(static_cast<double>(n))));
  }
  out.require(worst < 1e-12, "uniform-logit ce worst diff " + std::to_string(worst));
  std::printf("  triplet, joint, and uniform-ce identities within 1e-12\n");
  return out.ok;
}

// ---------------------------------------------------------------------------
// 5. Comparison-grid ordering at desk scale across 5 seeds.

struct SeedMetrics {
  std::map<std::string, double> eer, dcf;
};

SeedMetrics run_seed(uint64_t seed, const std::string& out_dir, Outcome& out) {
  svkit::ConfigMap map;
  map.set("run.seed", std::to_string(seed), "acceptance");
  map.set("run.out", out_dir, "acceptance");
  const auto cfg = svkit::experiment_from(map);
  const auto paths = svkit::PipelinePaths::under(cfg.out_dir);

  svkit::pipeline_gen_data(cfg);
  svkit::pipeline_featurize(cfg);

  const std::vector<std::string> wanted = {"baseline", "simnet", "triplet", "joint"};
  std::map<std::string, ScoreSet> sets;
  const auto trials = svkit::read_trials(paths.trials);
  for (const auto& spec : svkit::system_grid(cfg)) {
    if (std::find(wanted.begin(), wanted.end(), spec.name) == wanted.end()) continue;
    const std::clock_t c0 = std::clock();
    svkit::pipeline_train(cfg, spec);
    const double cpu_s = static_cast<double>(std::clock() - c0) / CLOCKS_PER_SEC;
    out.require(cpu_s < 600.0, spec.name + " training took " + std::to_string(cpu_s) + " s CPU");
    svkit::pipeline_extract(cfg, spec);
    svkit::pipeline_score(cfg, spec);
    auto set = svkit::read_scores(paths.score_file(spec.name), spec.name);
    svkit::attach_keys(set, trials);
    sets[spec.name] = std::move(set);
  }
  sets["fusion"] = svkit::fuse_scores({sets["simnet"], sets["triplet"]});

  SeedMetrics m;
  for (const auto& [name, set] : sets) {
    const auto curve = svkit::det_curve(set);
    m.eer[name] = svkit::eer(curve);
    m.dcf[name] = svkit::min_dcf16(curve);
  }
  return m;
}

bool criterion_grid_ordering() {
  Outcome out;
  const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  int win_triplet_eer = 0, win_simnet_dcf = 0, win_joint_both = 0, win_fusion = 0;
  for (uint64_t seed : seeds) {
    testutil::TempDir dir("accept5");
    const auto m = run_seed(seed, dir.path(), out);
    const bool a = m.eer.at("triplet") < m.eer.at("baseline");
    const bool b = m.dcf.at("simnet") < m.dcf.at("baseline");
    const bool c = m.eer.at("joint") <= m.eer.at("baseline") &&
                   m.dcf.at("joint") <= m.dcf.at("baseline");
    const bool d = m.eer.at("fusion") <=
                   std::min(m.eer.at("simnet"), m.eer.at("triplet")) + 0.3;
    win_triplet_eer += a;
    win_simnet_dcf += b;
    win_joint_both += c;
    win_fusion += d;
    std::printf(
        "  seed %llu: eer b %.2f s %.2f t %.2f j %.2f f %.2f | dcf b %.3f s %.3f t %.3f j %.3f "
        "| %c%c%c%c\n",
        static_cast<unsigned long long>(seed), m.eer.at("baseline"), m.eer.at("simnet"),
        m.eer.at("triplet"), m.eer.at("joint"), m.eer.at("fusion"), m.dcf.at("baseline"),
        m.dcf.at("simnet"), m.dcf.at("triplet"), m.dcf.at("joint"), a ? 'a' : '-', b ? 'b' : '-',
        c ? 'c' : '-', d ? 'd' : '-');
    std::fflush(stdout);
  }
  out.require(win_triplet_eer >= 4, "triplet EER beats baseline only " +
                                        std::to_string(win_triplet_eer) + "/5");
  out.require(win_simnet_dcf >= 4,
              "simnet DCF beats baseline only " + std::to_string(win_simnet_dcf) + "/5");
  out.require(win_joint_both >= 4,
              "joint no-worse-than-baseline only " + std::to_string(win_joint_both) + "/5");
  out.require(win_fusion >= 4,
              "fusion within 0.3 of best component only " + std::to_string(win_fusion) + "/5");
  return out.ok;
}

// ---------------------------------------------------------------------------
// 6. run-all determinism: identical bytes on a re-run with the same seed.

std::map<std::string, std::string> snapshot_dir(const std::string& dir) {
  std::map<std::string, std::string> bytes;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const auto rel = std::filesystem::relative(entry.path(), dir).string();
    bytes[rel] = testutil::read_file_bytes(entry.path().string());
  }
  return bytes;
}

bool criterion_determinism() {
  Outcome out;
  testutil::TempDir dir("accept6");
  svkit::ConfigMap map;
  map.set("corpus.train_speakers", "6", "acceptance");
  map.set("corpus.utterances", "4", "acceptance");
  map.set("corpus.eval_speakers", "4", "acceptance");
  map.set("corpus.eval_utterances", "4", "acceptance");
  map.set("corpus.duration_min", "0.9", "acceptance");
  map.set("corpus.duration_max", "1.2", "acceptance");
  map.set("corpus.targets_per_speaker", "2", "acceptance");
  map.set("corpus.nontarget_ratio", "2.0", "acceptance");
  map.set("model.scale", "0.05", "acceptance");
  map.set("train.batch_triplets", "2", "acceptance");
  map.set("train.epochs", "2", "acceptance");
  map.set("train.chunk_min", "18", "acceptance");
  map.set("train.chunk_max", "26", "acceptance");
  map.set("backend.lda_dim", "4", "acceptance");
  map.set("backend.plda_iterations", "5", "acceptance");
  map.set("run.seed", "11", "acceptance");
  map.set("run.out", dir.path(), "acceptance");
  const auto cfg = svkit::experiment_from(map);
  const auto paths = svkit::PipelinePaths::under(cfg.out_dir);

  std::ostringstream sink;
  svkit::pipeline_run_all(cfg, sink);
  const auto reports1 = snapshot_dir(paths.reports);
  const auto scores1 = snapshot_dir(paths.scores);
  svkit::pipeline_run_all(cfg, sink);
  const auto reports2 = snapshot_dir(paths.reports);
  const auto scores2 = snapshot_dir(paths.scores);

  out.require(!reports1.empty(), "no report artifacts produced");
  out.require(reports1 == reports2, "report artifacts differ between runs");
  out.require(scores1 == scores2, "score files differ between runs");
  std::printf("  %zu report files and %zu score files byte-identical across re-run\n",
              reports1.size(), scores1.size());
  return out.ok;
}

// ---------------------------------------------------------------------------
// 7. DET validity on 1000 random sets.

bool criterion_det_validity() {
  Outcome out;
  Rng rng(707);
  testutil::TempDir dir("accept7");
  const std::string csv = dir.file("det.csv");
  for (int k = 0; k < 1000 && out.ok; ++k) {
    const size_t targets = 1 + rng.uniform_int(40);
    const size_t nontargets = 2 + rng.uniform_int(120);
    const int levels = (k % 3 == 0) ? 3 : 0;
    const auto set = random_set(rng, targets, nontargets, rng.uniform(0.0, 3.0), levels);
    const auto curve = svkit::det_curve(set);
    const auto& p = curve.points;
    out.require(p.size() >= 2, "curve has fewer than 2 points");
    out.require(p.front().p_miss == 0.0 && p.front().p_fa == 1.0, "first point not (0,1)");
    out.require(p.back().p_miss == 1.0 && p.back().p_fa == 0.0, "last point not (1,0)");
    for (size_t i = 1; i < p.size(); ++i) {
      out.require(p[i].threshold > p[i - 1].threshold, "thresholds not strictly increasing");
      out.require(p[i].p_miss >= p[i - 1].p_miss, "p_miss not non-decreasing");
      out.require(p[i].p_fa <= p[i - 1].p_fa, "p_fa not non-increasing");
    }
    svkit::export_det_csv(curve, csv);
    const auto back = svkit::import_det_csv(csv);
    out.require(svkit::eer(back) == svkit::eer(curve), "eer changed after csv round-trip");
    out.require(svkit::min_dcf16(back) == svkit::min_dcf16(curve),
                "dcf changed after csv round-trip");
  }
  if (out.ok) std::printf("  1000 curves monotone with exact csv round-trips\n");
  return out.ok;
}

// ---------------------------------------------------------------------------
// 8. Frozen format goldens.

void make_goldens(const std::string& dir) {
  std::filesystem::create_directories(dir);

  std::vector<double> samples(8000);
  for (size_t i = 0; i < samples.size(); ++i)
    samples[i] = 0.5 * std::sin(2.0 * M_PI * 440.0 * static_cast<double>(i) / 8000.0);
  svkit::FeatureConfig fc;
  const auto feats = svkit::featurize(samples, fc, "golden440");
  svkit::save_feature_cache(dir + "/mfcc_440.bin", feats);

  svkit::ParamSet ps;
  Tensor w = Tensor::from({2, 3}, {0.5, -1.25, 2.0, -0.0078125, 3.5, -0.5});
  Tensor b = Tensor::from({3}, {1.0, -2.0, 0.25});
  std::vector<double> running = {0.125, -8.0};
  ps.add("layer.w", w);
  ps.add("layer.b", b);
  ps.add("layer.running", &running);
  ps.save(dir + "/tiny.svkp");

  ScoreSet scores;
  scores.system = "golden";
  scores.trials = {{"yue_s0001_u0001", "yue_s0101_u0002", 2.125, true, true},
                   {"yue_s0002_u0003", "tgl_s0102_u0001", -0.375, false, true},
                   {"tgl_s0003_u0002", "tgl_s0103_u0004", 0.0078125, false, true}};
  svkit::write_scores(dir + "/scores.txt", scores);

  const std::vector<svkit::ReportRow> rows = {{"base", "pool", 12.5, 0.75, 10, 20},
                                              {"base", "yue", 6.25, 0.5, 4, 8}};
  svkit::write_report_csv(dir + "/report.csv", rows);

  ScoreSet det;
  det.system = "golden";
  size_t i = 0;
  for (double s : {0.9, 0.8, 0.6, 0.55})
    det.trials.push_back({"e" + std::to_string(i++), "t", s, true, true});
  for (double s : {0.7, 0.4, 0.3, 0.2, 0.1, 0.05})
    det.trials.push_back({"e" + std::to_string(i++), "t", s, false, true});
  svkit::export_det_svg(svkit::det_curve(det), dir + "/det.svg");
}

bool criterion_format_goldens() {
  Outcome out;
  testutil::TempDir dir("accept8");
  make_goldens(dir.path());
  for (const char* name :
       {"mfcc_440.bin", "tiny.svkp", "scores.txt", "report.csv", "det.svg"}) {
    const auto fresh = testutil::read_file_bytes(dir.file(name));
    const auto frozen = testutil::read_file_bytes(std::string(SVKIT_GOLDEN_DIR "/") + name);
    out.require(!fresh.empty(), std::string(name) + " regenerated empty");
    out.require(!frozen.empty(), std::string(name) + " missing frozen golden");
    out.require(fresh == frozen, std::string(name) + " differs from frozen golden");
  }
  if (out.ok) std::printf("  5 format fixtures byte-identical to frozen goldens\n");
  return out.ok;
}

struct Criterion {
  int number;
  const char* name;
  bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "gradient correctness", criterion_gradients},
    {2, "metric oracles", criterion_metric_oracles},
    {3, "plda recovery", criterion_plda_recovery},
    {4, "loss identities", criterion_loss_identities},
    {5, "grid ordering", criterion_grid_ordering},
    {6, "run-all determinism", criterion_determinism},
    {7, "det validity", criterion_det_validity},
    {8, "format goldens", criterion_format_goldens},
};

}  // namespace

int main(int argc, char** argv) {
  const std::string arg = argc > 1 ? argv[1] : "all";
  if (arg == "make-goldens") {
    const std::string dir = argc > 2 ? argv[2] : SVKIT_GOLDEN_DIR;
    make_goldens(dir);
    std::printf("goldens written to %s\n", dir.c_str());
    return 0;
  }

  int failed = 0;
  bool matched = false;
  for (const auto& c : kCriteria) {
    if (arg != "all" && arg != std::to_string(c.number)) continue;
    matched = true;
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      std::printf("  exception: %s\n", e.what());
    }
    std::printf("criterion %d (%s): %s\n", c.number, c.name, ok ? "PASS" : "FAIL");
    std::fflush(stdout);
    failed += !ok;
  }
  if (!matched) {
    std::fprintf(stderr, "usage: svkit_acceptance [1-8|all|make-goldens <dir>]\n");
    return 2;
  }
  return failed == 0 ? 0 : 1;
}
