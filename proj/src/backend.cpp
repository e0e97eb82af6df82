#include "svkit/backend.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "svkit/errors.hpp"

namespace svkit {

namespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

Matrix to_matrix(const std::vector<double>& data, size_t rows, size_t cols) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                        Eigen::RowMajor>>(data.data(), rows, cols);
}

std::vector<double> from_matrix(const Matrix& m) {
  std::vector<double> out(static_cast<size_t>(m.rows() * m.cols()));
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      out.data(), m.rows(), m.cols()) = m;
  return out;
}

size_t common_dim(const std::vector<Embedding>& embs) {
  if (embs.empty())
    throw Error(ErrorCategory::kContract, "need at least one embedding");
  const size_t dim = embs.front().vec.size();
  for (const auto& e : embs)
    if (e.vec.size() != dim)
      throw Error(ErrorCategory::kDimension,
                  "embedding '" + e.utterance_id + "' has dimension " +
                      std::to_string(e.vec.size()) + ", expected " + std::to_string(dim));
  if (dim == 0) throw Error(ErrorCategory::kDimension, "embeddings have dimension 0");
  return dim;
}

std::map<std::string, std::vector<const Embedding*>> by_speaker(
    const std::vector<Embedding>& embs) {
  std::map<std::string, std::vector<const Embedding*>> groups;
  for (const auto& e : embs) groups[e.speaker_id].push_back(&e);
  return groups;
}

/// Cholesky with a one-shot +1e-8 I retry; `what` names the matrix.
Eigen::LLT<Matrix> pd_factor(Matrix& m, const std::string& what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  m += 1e-8 * Matrix::Identity(m.rows(), m.cols());
  llt.compute(m);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCategory::kNumeric, what + " is not positive definite");
  return llt;
}

double log_det(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

constexpr double kLog2Pi = 1.8378770664093454836;

// Total log-likelihood of the grouped, centered data under (B, W).
double plda_log_likelihood(const std::vector<Matrix>& groups, const Matrix& b_cov,
                           const Matrix& w_cov) {
  const auto d = b_cov.rows();
  Matrix w = w_cov;
  const Eigen::LLT<Matrix> wllt = pd_factor(w, "within covariance");
  const double logdet_w = log_det(wllt);

  double ll = 0.0;
  for (const auto& g : groups) {
    const auto n = g.rows();
    const Vector mean = g.colwise().mean().transpose();
    const Matrix centered = g.rowwise() - mean.transpose();
    const double pooled =
        (centered * wllt.solve(centered.transpose())).diagonal().sum();
    Matrix shifted = b_cov + w_cov / static_cast<double>(n);
    const Eigen::LLT<Matrix> gllt = pd_factor(shifted, "marginal covariance");
    const double quad = mean.dot(gllt.solve(mean));
    ll += -0.5 * (static_cast<double>(n * d) * kLog2Pi +
                  static_cast<double>(n - 1) * logdet_w +
                  static_cast<double>(d) * std::log(static_cast<double>(n)) +
                  log_det(gllt) + pooled + quad);
  }
  return ll;
}

}  // namespace

std::vector<double> mean_vector(const std::vector<Embedding>& embs) {
  const size_t dim = common_dim(embs);
  std::vector<double> mean(dim, 0.0);
  for (const auto& e : embs)
    for (size_t i = 0; i < dim; ++i) mean[i] += e.vec[i];
  for (auto& v : mean) v /= static_cast<double>(embs.size());
  return mean;
}

void center_embeddings(std::vector<Embedding>& embs, const std::vector<double>& mean) {
  for (auto& e : embs) {
    if (e.vec.size() != mean.size())
      throw Error(ErrorCategory::kDimension,
                  "embedding '" + e.utterance_id + "' does not match the mean dimension");
    for (size_t i = 0; i < mean.size(); ++i) e.vec[i] -= mean[i];
  }
}

std::vector<double> LdaModel::project(const std::vector<double>& e) const {
  if (e.size() != in_dim)
    throw Error(ErrorCategory::kDimension,
                "lda expects dimension " + std::to_string(in_dim) + ", got " +
                    std::to_string(e.size()));
  std::vector<double> out(out_dim, 0.0);
  for (size_t i = 0; i < in_dim; ++i) {
    const double v = e[i];
    const double* row = matrix.data() + i * out_dim;
    for (size_t j = 0; j < out_dim; ++j) out[j] += v * row[j];
  }
  return out;
}

LdaModel fit_lda(const std::vector<Embedding>& embs, size_t out_dim) {
  const size_t dim = common_dim(embs);
  const auto groups = by_speaker(embs);
  if (groups.size() < 2)
    throw Error(ErrorCategory::kContract, "lda needs at least 2 speakers");
  if (out_dim == 0) throw Error(ErrorCategory::kContract, "lda output dimension is 0");
  if (out_dim > dim || out_dim > groups.size() - 1)
    throw Error(ErrorCategory::kContract,
                "lda output dimension " + std::to_string(out_dim) + " exceeds min(D, speakers-1) = " +
                    std::to_string(std::min(dim, groups.size() - 1)));

  Vector mu = Vector::Zero(dim);
  for (const auto& e : embs)
    mu += Eigen::Map<const Vector>(e.vec.data(), static_cast<Eigen::Index>(dim));
  mu /= static_cast<double>(embs.size());

  Matrix sb = Matrix::Zero(dim, dim);
  Matrix sw = Matrix::Zero(dim, dim);
  for (const auto& [spk, members] : groups) {
    (void)spk;
    Vector cm = Vector::Zero(dim);
    for (const auto* e : members)
      cm += Eigen::Map<const Vector>(e->vec.data(), static_cast<Eigen::Index>(dim));
    cm /= static_cast<double>(members.size());
    const Vector diff = cm - mu;
    sb += static_cast<double>(members.size()) * diff * diff.transpose();
    for (const auto* e : members) {
      const Vector x =
          Eigen::Map<const Vector>(e->vec.data(), static_cast<Eigen::Index>(dim)) - cm;
      sw += x * x.transpose();
    }
  }
  sw += 1e-6 * Matrix::Identity(dim, dim);

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> solver(sb, sw);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorCategory::kNumeric, "generalized eigensolve failed on the lda scatters");

  LdaModel model;
  model.in_dim = dim;
  model.out_dim = out_dim;
  // eigenvalues come out ascending; keep the top out_dim, largest first
  Matrix proj(dim, out_dim);
  for (size_t j = 0; j < out_dim; ++j)
    proj.col(static_cast<Eigen::Index>(j)) =
        solver.eigenvectors().col(static_cast<Eigen::Index>(dim - 1 - j));
  if (!proj.allFinite())
    throw Error(ErrorCategory::kNumeric, "lda projection is not finite");
  model.matrix = from_matrix(proj);
  return model;
}

std::vector<double> length_normalize(const std::vector<double>& e) {
  double norm2 = 0.0;
  for (double v : e) norm2 += v * v;
  if (norm2 <= 0.0)
    throw Error(ErrorCategory::kDomain, "cannot length-normalize the zero vector");
  const double scale = std::sqrt(static_cast<double>(e.size())) / std::sqrt(norm2);
  std::vector<double> out(e.size());
  for (size_t i = 0; i < e.size(); ++i) out[i] = e[i] * scale;
  return out;
}

void PldaModel::prepare() {
  if (dim == 0 || mu.size() != dim || between.size() != dim * dim ||
      within.size() != dim * dim)
    throw Error(ErrorCategory::kDimension, "plda model fields are inconsistent");
  const Matrix b = to_matrix(between, dim, dim);
  Matrix w = to_matrix(within, dim, dim);
  pd_factor(w, "within covariance");

  Matrix t = b + w;
  const Eigen::LLT<Matrix> tllt = pd_factor(t, "total covariance");
  const Matrix tinv = tllt.solve(Matrix::Identity(dim, dim));
  Matrix schur = t - b * tinv * b;
  const Eigen::LLT<Matrix> sllt = pd_factor(schur, "plda schur complement");
  const Matrix m = sllt.solve(Matrix::Identity(dim, dim));

  Matrix qm = tinv - m;
  Matrix pm = tinv * b * m;
  // exact math makes both symmetric; enforce it against roundoff
  qm = 0.5 * (qm + qm.transpose()).eval();
  pm = 0.5 * (pm + pm.transpose()).eval();
  q = from_matrix(qm);
  p = from_matrix(pm);
  c0 = 0.5 * (log_det(tllt) - log_det(sllt));
  fitted = true;
}

PldaModel fit_plda(const std::vector<Embedding>& embs, size_t iterations) {
  const size_t dim = common_dim(embs);
  const auto groups = by_speaker(embs);
  if (groups.size() < 2)
    throw Error(ErrorCategory::kContract, "plda needs at least 2 speakers");
  for (const auto& [spk, members] : groups)
    if (members.size() < 2)
      throw Error(ErrorCategory::kContract,
                  "speaker '" + spk + "' needs at least 2 embeddings for plda");
  if (iterations == 0)
    throw Error(ErrorCategory::kContract, "plda needs at least 1 iteration");

  Vector mu = Vector::Zero(dim);
  for (const auto& e : embs)
    mu += Eigen::Map<const Vector>(e.vec.data(), static_cast<Eigen::Index>(dim));
  mu /= static_cast<double>(embs.size());

  // centered per-speaker data, speaker order fixed by the sorted map
  std::vector<Matrix> data;
  for (const auto& [spk, members] : groups) {
    (void)spk;
    Matrix g(members.size(), dim);
    for (size_t r = 0; r < members.size(); ++r)
      g.row(static_cast<Eigen::Index>(r)) =
          (Eigen::Map<const Vector>(members[r]->vec.data(), static_cast<Eigen::Index>(dim)) -
           mu)
              .transpose();
    data.push_back(std::move(g));
  }

  const size_t total = embs.size();
  Matrix b_cov = Matrix::Zero(dim, dim);
  Matrix w_cov = Matrix::Zero(dim, dim);
  for (const auto& g : data) {
    const Vector cm = g.colwise().mean().transpose();
    b_cov += static_cast<double>(g.rows()) * cm * cm.transpose();
    const Matrix centered = g.rowwise() - cm.transpose();
    w_cov += centered.transpose() * centered;
  }
  b_cov /= static_cast<double>(total);
  w_cov /= static_cast<double>(total);
  pd_factor(b_cov, "between covariance");
  pd_factor(w_cov, "within covariance");

  std::vector<double> trace;
  trace.push_back(plda_log_likelihood(data, b_cov, w_cov));

  for (size_t it = 0; it < iterations; ++it) {
    Matrix w = w_cov;
    const Eigen::LLT<Matrix> wllt = pd_factor(w, "within covariance");
    Matrix b = b_cov;
    const Eigen::LLT<Matrix> bllt = pd_factor(b, "between covariance");
    const Matrix winv = wllt.solve(Matrix::Identity(dim, dim));
    const Matrix binv = bllt.solve(Matrix::Identity(dim, dim));

    Matrix b_acc = Matrix::Zero(dim, dim);
    Matrix w_acc = Matrix::Zero(dim, dim);
    for (const auto& g : data) {
      const double n = static_cast<double>(g.rows());
      Matrix lambda = binv + n * winv;
      const Eigen::LLT<Matrix> lllt = pd_factor(lambda, "posterior precision");
      const Matrix lambda_inv = lllt.solve(Matrix::Identity(dim, dim));
      const Vector sum = g.colwise().sum().transpose();
      const Vector y = lllt.solve(winv * sum);

      b_acc += y * y.transpose() + lambda_inv;
      const Matrix resid = g.rowwise() - y.transpose();
      w_acc += resid.transpose() * resid + n * lambda_inv;
    }
    b_cov = b_acc / static_cast<double>(data.size());
    w_cov = w_acc / static_cast<double>(total);

    const double ll = plda_log_likelihood(data, b_cov, w_cov);
    if (ll + 1e-8 * (1.0 + std::abs(trace.back())) < trace.back())
      throw Error(ErrorCategory::kNumeric,
                  "plda log-likelihood decreased at iteration " + std::to_string(it + 1));
    trace.push_back(ll);
  }

  PldaModel model;
  model.dim = dim;
  model.mu.assign(mu.data(), mu.data() + dim);
  model.between = from_matrix(b_cov);
  model.within = from_matrix(w_cov);
  model.ll_trace = std::move(trace);
  model.prepare();
  return model;
}

double plda_score(const PldaModel& m, const std::vector<double>& enroll,
                  const std::vector<double>& test) {
  if (!m.fitted) throw Error(ErrorCategory::kContract, "plda model not fitted");
  if (enroll.size() != m.dim || test.size() != m.dim)
    throw Error(ErrorCategory::kDimension,
                "plda expects dimension " + std::to_string(m.dim));
  std::vector<double> e(m.dim), t(m.dim);
  for (size_t i = 0; i < m.dim; ++i) {
    e[i] = enroll[i] - m.mu[i];
    t[i] = test[i] - m.mu[i];
  }
  double quad_e = 0.0, quad_t = 0.0, cross = 0.0;
  for (size_t i = 0; i < m.dim; ++i) {
    const double* qrow = m.q.data() + i * m.dim;
    const double* prow = m.p.data() + i * m.dim;
    double qe = 0.0, qt = 0.0, pt = 0.0;
    for (size_t j = 0; j < m.dim; ++j) {
      qe += qrow[j] * e[j];
      qt += qrow[j] * t[j];
      pt += prow[j] * t[j];
    }
    quad_e += e[i] * qe;
    quad_t += t[i] * qt;
    cross += e[i] * pt;
  }
  return 0.5 * quad_e + 0.5 * quad_t + cross + m.c0;
}

double cosine_score(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw Error(ErrorCategory::kDimension, "cosine expects equal dimensions");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0)
    throw Error(ErrorCategory::kDomain, "cosine of a zero vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double euclidean_score(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size())
    throw Error(ErrorCategory::kDimension, "euclidean expects equal dimensions");
  double d2 = 0.0;
  for (size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return -std::sqrt(d2);
}

namespace {

std::map<std::pair<std::string, std::string>, size_t> key_index(const ScoreSet& set) {
  std::map<std::pair<std::string, std::string>, size_t> index;
  for (size_t i = 0; i < set.trials.size(); ++i) {
    const auto& t = set.trials[i];
    if (!index.emplace(std::make_pair(t.enroll, t.test), i).second)
      throw Error(ErrorCategory::kFusion,
                  "duplicate trial key (" + t.enroll + ", " + t.test + ") in set '" +
                      set.system + "'");
  }
  return index;
}

std::vector<double> z_normalized(const ScoreSet& set) {
  const size_t n = set.trials.size();
  double mean = 0.0;
  for (const auto& t : set.trials) mean += t.score;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (const auto& t : set.trials) var += (t.score - mean) * (t.score - mean);
  var /= static_cast<double>(n);
  const double stddev = std::sqrt(var);
  std::vector<double> z(n, 0.0);
  if (stddev > 0.0)
    for (size_t i = 0; i < n; ++i) z[i] = (set.trials[i].score - mean) / stddev;
  return z;
}

}  // namespace

ScoreSet fuse_scores(const std::vector<ScoreSet>& sets, const std::vector<double>& weights) {
  if (sets.empty()) throw Error(ErrorCategory::kFusion, "nothing to fuse");
  for (const auto& s : sets)
    if (s.trials.empty())
      throw Error(ErrorCategory::kFusion, "score set '" + s.system + "' is empty");

  std::vector<double> w = weights;
  if (w.empty()) w.assign(sets.size(), 1.0);
  if (w.size() != sets.size())
    throw Error(ErrorCategory::kFusion,
                "got " + std::to_string(w.size()) + " weights for " +
                    std::to_string(sets.size()) + " score sets");
  double wsum = 0.0;
  for (double v : w) {
    if (v < 0.0) throw Error(ErrorCategory::kFusion, "fusion weights must be non-negative");
    wsum += v;
  }
  if (wsum <= 0.0) throw Error(ErrorCategory::kFusion, "fusion weights sum to zero");

  const auto& base = sets.front();
  key_index(base);  // enforces uniqueness on the reference set too
  std::vector<std::vector<double>> z;
  std::vector<std::vector<size_t>> order;  // per set, index aligned with base order
  for (const auto& s : sets) z.push_back(z_normalized(s));
  for (size_t k = 1; k < sets.size(); ++k) {
    const auto index = key_index(sets[k]);
    if (sets[k].trials.size() != base.trials.size())
      throw Error(ErrorCategory::kFusion,
                  "score set '" + sets[k].system + "' has " +
                      std::to_string(sets[k].trials.size()) + " trials, expected " +
                      std::to_string(base.trials.size()));
    std::vector<size_t> map_k(base.trials.size());
    std::string missing;
    size_t missing_count = 0;
    for (size_t i = 0; i < base.trials.size(); ++i) {
      const auto it = index.find({base.trials[i].enroll, base.trials[i].test});
      if (it == index.end()) {
        ++missing_count;
        if (missing_count <= 5)
          missing += " (" + base.trials[i].enroll + ", " + base.trials[i].test + ")";
      } else {
        map_k[i] = it->second;
      }
    }
    if (missing_count > 0)
      throw Error(ErrorCategory::kFusion,
                  "score set '" + sets[k].system + "' is missing " +
                      std::to_string(missing_count) + " trial keys:" + missing);
    order.push_back(std::move(map_k));
  }

  ScoreSet fused;
  fused.system = "fuse:";
  for (size_t k = 0; k < sets.size(); ++k)
    fused.system += (k == 0 ? "" : "+") + sets[k].system;
  fused.trials = base.trials;
  for (size_t i = 0; i < fused.trials.size(); ++i) {
    double s = w[0] * z[0][i];
    for (size_t k = 1; k < sets.size(); ++k) s += w[k] * z[k][order[k - 1][i]];
    fused.trials[i].score = s / wsum;
  }
  return fused;
}

void write_scores(const std::string& path, const ScoreSet& set) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write score file '" + path + "'");
  char buf[64];
  for (const auto& t : set.trials) {
    std::snprintf(buf, sizeof(buf), " %.9f\n", t.score);
    out << t.enroll << ' ' << t.test << buf;
  }
}

ScoreSet read_scores(const std::string& path, const std::string& system) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot read score file '" + path + "'");
  ScoreSet set;
  set.system = system;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    ScoredTrial t;
    if (!(row >> t.enroll >> t.test >> t.score))
      throw Error(ErrorCategory::kIo,
                  path + ":" + std::to_string(lineno) + ": expected 'enroll test score'");
    std::string extra;
    if (row >> extra)
      throw Error(ErrorCategory::kIo,
                  path + ":" + std::to_string(lineno) + ": trailing content '" + extra + "'");
    if (!std::isfinite(t.score))
      throw Error(ErrorCategory::kIo,
                  path + ":" + std::to_string(lineno) + ": score is not finite");
    set.trials.push_back(std::move(t));
  }
  return set;
}

void attach_keys(ScoreSet& set, const std::vector<Trial>& keyed) {
  std::map<std::pair<std::string, std::string>, bool> key;
  for (const auto& t : keyed) {
    if (!t.keyed)
      throw Error(ErrorCategory::kMetric,
                  "trial (" + t.enroll + ", " + t.test + ") carries no key");
    key[{t.enroll, t.test}] = t.target;
  }
  for (auto& t : set.trials) {
    const auto it = key.find({t.enroll, t.test});
    if (it == key.end())
      throw Error(ErrorCategory::kMetric,
                  "no key for trial (" + t.enroll + ", " + t.test + ")");
    t.target = it->second;
    t.keyed = true;
  }
}

std::vector<double> Backend::transform(const std::vector<double>& e) const {
  if (e.size() != mean.size())
    throw Error(ErrorCategory::kDimension,
                "backend expects dimension " + std::to_string(mean.size()) + ", got " +
                    std::to_string(e.size()));
  std::vector<double> centered(e.size());
  for (size_t i = 0; i < e.size(); ++i) centered[i] = e[i] - mean[i];
  return length_normalize(lda.project(centered));
}

double Backend::score(const std::vector<double>& enroll, const std::vector<double>& test) const {
  return plda_score(plda, transform(enroll), transform(test));
}

namespace {

void write_block(std::ofstream& out, const std::string& tag,
                 const std::vector<double>& values) {
  out << tag;
  char buf[40];
  for (double v : values) {
    std::snprintf(buf, sizeof(buf), " %.17g", v);
    out << buf;
  }
  out << '\n';
}

std::vector<double> read_block(std::istream& in, const std::string& tag, size_t count,
                               const std::string& path) {
  std::string got;
  if (!(in >> got) || got != tag)
    throw Error(ErrorCategory::kIo, path + ": expected '" + tag + "' block");
  std::vector<double> values(count);
  for (auto& v : values)
    if (!(in >> v)) throw Error(ErrorCategory::kIo, path + ": truncated '" + tag + "' block");
  return values;
}

}  // namespace

void Backend::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write backend file '" + path + "'");
  out << "svkit-backend 1 " << mean.size() << ' ' << lda.out_dim << '\n';
  write_block(out, "mean", mean);
  write_block(out, "lda", lda.matrix);
  write_block(out, "plda.mu", plda.mu);
  write_block(out, "plda.between", plda.between);
  write_block(out, "plda.within", plda.within);
}

Backend Backend::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot read backend file '" + path + "'");
  std::string magic;
  int version = 0;
  size_t dim = 0, out_dim = 0;
  if (!(in >> magic >> version >> dim >> out_dim) || magic != "svkit-backend" ||
      version != 1)
    throw Error(ErrorCategory::kIo, path + ": not a backend file");
  Backend b;
  b.mean = read_block(in, "mean", dim, path);
  b.lda.in_dim = dim;
  b.lda.out_dim = out_dim;
  b.lda.matrix = read_block(in, "lda", dim * out_dim, path);
  b.plda.dim = out_dim;
  b.plda.mu = read_block(in, "plda.mu", out_dim, path);
  b.plda.between = read_block(in, "plda.between", out_dim * out_dim, path);
  b.plda.within = read_block(in, "plda.within", out_dim * out_dim, path);
  b.plda.prepare();
  return b;
}

Backend fit_backend(const std::vector<Embedding>& train, size_t lda_dim,
                    size_t plda_iterations) {
  Backend b;
  b.mean = mean_vector(train);
  std::vector<Embedding> centered = train;
  center_embeddings(centered, b.mean);
  b.lda = fit_lda(centered, lda_dim);
  for (auto& e : centered) e.vec = length_normalize(b.lda.project(e.vec));
  b.plda = fit_plda(centered, plda_iterations);
  return b;
}

ScoreMethod score_method_from_string(const std::string& name) {
  if (name == "plda") return ScoreMethod::kPlda;
  if (name == "cosine") return ScoreMethod::kCosine;
  if (name == "euclidean") return ScoreMethod::kEuclidean;
  throw Error(ErrorCategory::kUsage,
              "unknown scoring method '" + name + "' (plda, cosine, euclidean)");
}

std::string to_string(ScoreMethod method) {
  switch (method) {
    case ScoreMethod::kPlda: return "plda";
    case ScoreMethod::kCosine: return "cosine";
    case ScoreMethod::kEuclidean: return "euclidean";
  }
  throw Error(ErrorCategory::kUsage, "unknown scoring method");
}

ScoreSet score_trials_backend(const Backend& backend, ScoreMethod method,
                              const std::vector<Trial>& trials,
                              const std::vector<Embedding>& embeddings,
                              const std::string& system) {
  const auto index = index_by_utterance(embeddings);
  std::map<std::string, std::vector<double>> transformed;
  const auto lookup = [&](const std::string& utt) -> const std::vector<double>& {
    const auto cached = transformed.find(utt);
    if (cached != transformed.end()) return cached->second;
    const auto it = index.find(utt);
    if (it == index.end())
      throw Error(ErrorCategory::kLookup, "no embedding for utterance '" + utt + "'");
    return transformed.emplace(utt, backend.transform(it->second->vec)).first->second;
  };

  ScoreSet set;
  set.system = system;
  set.trials.reserve(trials.size());
  for (const auto& trial : trials) {
    const auto& e = lookup(trial.enroll);
    const auto& t = lookup(trial.test);
    ScoredTrial s;
    s.enroll = trial.enroll;
    s.test = trial.test;
    s.target = trial.target;
    s.keyed = trial.keyed;
    switch (method) {
      case ScoreMethod::kPlda: s.score = plda_score(backend.plda, e, t); break;
      case ScoreMethod::kCosine: s.score = cosine_score(e, t); break;
      case ScoreMethod::kEuclidean: s.score = euclidean_score(e, t); break;
    }
    set.trials.push_back(std::move(s));
  }
  return set;
}

}  // namespace svkit
