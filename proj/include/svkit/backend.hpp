#pragma once

#include <string>
#include <vector>

#include "svkit/corpus.hpp"
#include "svkit/embedding.hpp"

namespace svkit {

std::vector<double> mean_vector(const std::vector<Embedding>& embs);
void center_embeddings(std::vector<Embedding>& embs, const std::vector<double>& mean);

// Linear discriminant projection. Columns of `matrix` are the generalized
// eigenvectors of (between-class scatter, within-class scatter + 1e-6 I)
// with the largest eigenvalues.
struct LdaModel {
  size_t in_dim = 0;
  size_t out_dim = 0;
  std::vector<double> matrix;  // row-major in_dim x out_dim

  std::vector<double> project(const std::vector<double>& e) const;
};

/// Requires out_dim <= min(D, num_speakers - 1) and at least 2 speakers.
LdaModel fit_lda(const std::vector<Embedding>& embs, size_t out_dim);

/// sqrt(D) * e / ||e||; idempotent, rejects the zero vector.
std::vector<double> length_normalize(const std::vector<double>& e);

// Two-covariance model x = mu + y + eps with y ~ N(0, between) and
// eps ~ N(0, within). Scoring uses the precomputed (q, p, c0) form
//   llr(e, t) = e'Qe/2 + t'Qt/2 + e'Pt + c0
// on centered vectors.
struct PldaModel {
  size_t dim = 0;
  std::vector<double> mu;
  std::vector<double> between;  // row-major dim x dim
  std::vector<double> within;
  std::vector<double> ll_trace;  // total log-likelihood, init state first

  std::vector<double> q;
  std::vector<double> p;
  double c0 = 0.0;
  bool fitted = false;

  /// Builds the scoring cache from mu/between/within; validates that
  /// within is positive definite.
  void prepare();
};

/// EM fit; every speaker needs at least 2 embeddings. The likelihood
/// trace has `iterations` + 1 entries and never decreases.
PldaModel fit_plda(const std::vector<Embedding>& embs, size_t iterations = 10);

double plda_score(const PldaModel& m, const std::vector<double>& enroll,
                  const std::vector<double>& test);

/// a.b / (||a|| ||b||); rejects zero vectors.
double cosine_score(const std::vector<double>& a, const std::vector<double>& b);

/// Negated Euclidean distance, so larger means more similar.
double euclidean_score(const std::vector<double>& a, const std::vector<double>& b);

struct ScoreSet {
  std::string system;
  std::vector<ScoredTrial> trials;
};

/// Weighted mean of per-set z-normalized scores (population statistics; a
/// constant set normalizes to zero). Sets must cover identical trial keys;
/// weights default to equal.
ScoreSet fuse_scores(const std::vector<ScoreSet>& sets,
                     const std::vector<double>& weights = {});

/// Text lines "enroll test score" with 9 decimal digits, input order.
void write_scores(const std::string& path, const ScoreSet& set);
ScoreSet read_scores(const std::string& path, const std::string& system);

/// Copies target keys from a keyed trial list onto the scores.
void attach_keys(ScoreSet& set, const std::vector<Trial>& keyed);

// The fitted chain: center, LDA projection, length normalization, PLDA.
struct Backend {
  std::vector<double> mean;
  LdaModel lda;
  PldaModel plda;

  std::vector<double> transform(const std::vector<double>& e) const;
  double score(const std::vector<double>& enroll, const std::vector<double>& test) const;

  void save(const std::string& path) const;
  static Backend load(const std::string& path);
};

Backend fit_backend(const std::vector<Embedding>& train, size_t lda_dim,
                    size_t plda_iterations = 10);

enum class ScoreMethod { kPlda, kCosine, kEuclidean };

ScoreMethod score_method_from_string(const std::string& name);
std::string to_string(ScoreMethod method);

/// Scores a trial list against raw embeddings through the backend chain.
ScoreSet score_trials_backend(const Backend& backend, ScoreMethod method,
                              const std::vector<Trial>& trials,
                              const std::vector<Embedding>& embeddings,
                              const std::string& system);

}  // namespace svkit
