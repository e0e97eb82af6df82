#include "svkit/simnet.hpp"

#include <cmath>

#include "svkit/errors.hpp"

namespace svkit {

size_t SimNetConfig::scaled(size_t dim) const {
  const auto s = static_cast<size_t>(std::lround(static_cast<double>(dim) * scale_factor));
  return std::max<size_t>(2, s);
}

void SimNetConfig::validate() const {
  if (input_dim == 0) throw Error(ErrorCategory::kConfig, "simnet input_dim must be positive");
  if (lstm_hidden == 0) throw Error(ErrorCategory::kConfig, "lstm_hidden must be positive");
  if (num_blstm_layers == 0)
    throw Error(ErrorCategory::kConfig, "need at least one blstm layer");
  if (fc_dims.empty()) throw Error(ErrorCategory::kConfig, "need at least one fc layer");
  if (scale_factor <= 0 || scale_factor > 1)
    throw Error(ErrorCategory::kConfig, "scale_factor must lie in (0, 1]");
}

void LstmDirection::init(size_t in, size_t hidden, Rng& rng) {
  const double sx = 1.0 / std::sqrt(static_cast<double>(in));
  const double sh = 1.0 / std::sqrt(static_cast<double>(hidden));
  wx = Tensor::from({in, 4 * hidden}, rng.normal_vector(in * 4 * hidden, 0.0, sx), true);
  wh = Tensor::from({hidden, 4 * hidden}, rng.normal_vector(hidden * 4 * hidden, 0.0, sh), true);
  b = Tensor::zeros({4 * hidden}, true);
  for (size_t i = hidden; i < 2 * hidden; ++i) b.value()[i] = 1.0;  // forget gate
}

void LstmDirection::collect(ParamSet& set, const std::string& prefix) {
  set.add(prefix + ".wx", wx);
  set.add(prefix + ".wh", wh);
  set.add(prefix + ".b", b);
}

std::pair<Tensor, Tensor> lstm_step(Tape& tape, const Tensor& x, const Tensor& h,
                                    const Tensor& c, const LstmDirection& dir) {
  const size_t hid = dir.wh.rows();
  Tensor z = tape.add(tape.linear(x, dir.wx, dir.b), tape.matmul(h, dir.wh));
  Tensor i = tape.sigmoid(tape.slice(z, 1, 0, hid));
  Tensor f = tape.sigmoid(tape.slice(z, 1, hid, 2 * hid));
  Tensor g = tape.tanh(tape.slice(z, 1, 2 * hid, 3 * hid));
  Tensor o = tape.sigmoid(tape.slice(z, 1, 3 * hid, 4 * hid));
  Tensor c_next = tape.add(tape.mul(f, c), tape.mul(i, g));
  Tensor h_next = tape.mul(o, tape.tanh(c_next));
  return {h_next, c_next};
}

SimilarityNet::SimilarityNet(const SimNetConfig& cfg, Rng& rng) : cfg_(cfg) {
  cfg_.validate();
  hidden_ = cfg_.scaled(cfg_.lstm_hidden);
  size_t in = cfg_.input_dim;
  for (size_t l = 0; l < cfg_.num_blstm_layers; ++l) {
    Layer layer;
    layer.fwd.init(in, hidden_, rng);
    layer.bwd.init(in, hidden_, rng);
    blstm_.push_back(std::move(layer));
    in = 2 * hidden_;
  }
  for (size_t dim : cfg_.fc_dims) {
    const size_t out = cfg_.scaled(dim);
    AffineLayer aff;
    aff.init(in, out, rng);
    fc_.push_back(std::move(aff));
    BatchNormLayer bn;
    bn.init(out);
    fc_norms_.push_back(std::move(bn));
    in = out;
  }
  out_.init(in, 1, rng);
}

Tensor SimilarityNet::pair_logits(Tape& tape, const Tensor& x1, const Tensor& x2, Mode mode) {
  if (x1.ndim() != 2 || !x1.same_shape(x2))
    throw Error(ErrorCategory::kDimension, "pair inputs must be equal-shape rank-2 tensors");
  if (x1.cols() != cfg_.input_dim)
    throw Error(ErrorCategory::kDimension,
                "pair input width " + std::to_string(x1.cols()) + " does not match input_dim " +
                    std::to_string(cfg_.input_dim));
  const size_t batch = x1.rows();
  Tensor zero_h = Tensor::zeros({batch, hidden_});
  Tensor zero_c = Tensor::zeros({batch, hidden_});

  // the two embeddings are the sequence steps
  Tensor in1 = x1, in2 = x2;
  Tensor final_fwd, final_bwd;
  for (auto& layer : blstm_) {
    const auto f1 = lstm_step(tape, in1, zero_h, zero_c, layer.fwd);
    const auto f2 = lstm_step(tape, in2, f1.first, f1.second, layer.fwd);
    const auto b2 = lstm_step(tape, in2, zero_h, zero_c, layer.bwd);
    const auto b1 = lstm_step(tape, in1, b2.first, b2.second, layer.bwd);
    in1 = tape.concat({f1.first, b1.first}, 1);
    in2 = tape.concat({f2.first, b2.first}, 1);
    final_fwd = f2.first;  // forward direction ends at step 2
    final_bwd = b1.first;  // backward direction ends at step 1
  }
  Tensor h = tape.concat({final_fwd, final_bwd}, 1);
  for (size_t i = 0; i < fc_.size(); ++i)
    h = tape.relu(fc_norms_[i].apply(tape, fc_[i].apply(tape, h), mode));
  return out_.apply(tape, h);  // [P x 1]
}

double SimilarityNet::pair_score(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != cfg_.input_dim || b.size() != cfg_.input_dim)
    throw Error(ErrorCategory::kDimension, "embedding width does not match simnet input_dim");
  Tape tape;
  Tensor xa = Tensor::from({1, a.size()}, std::vector<double>(a));
  Tensor xb = Tensor::from({1, b.size()}, std::vector<double>(b));
  const double l1 = pair_logits(tape, xa, xb, Mode::kEval).item();
  const double l2 = pair_logits(tape, xb, xa, Mode::kEval).item();
  return 0.5 * (l1 + l2);
}

double SimilarityNet::pair_probability(const std::vector<double>& a,
                                       const std::vector<double>& b) {
  const double z = pair_score(a, b);
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

ParamSet SimilarityNet::params() {
  ParamSet set;
  for (size_t l = 0; l < blstm_.size(); ++l) {
    const std::string prefix = "blstm" + std::to_string(l + 1);
    blstm_[l].fwd.collect(set, prefix + ".fwd");
    blstm_[l].bwd.collect(set, prefix + ".bwd");
  }
  for (size_t i = 0; i < fc_.size(); ++i) {
    const std::string prefix = "fc" + std::to_string(i + 1);
    fc_[i].collect(set, prefix);
    fc_norms_[i].collect(set, prefix + ".bn");
  }
  out_.collect(set, "out");
  return set;
}

std::vector<ScoredTrial> score_trials_simnet(SimilarityNet& net,
                                             const std::vector<Trial>& trials,
                                             const std::vector<Embedding>& embeddings) {
  const auto index = index_by_utterance(embeddings);
  const size_t dim = net.config().input_dim;
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());

  constexpr size_t kBatch = 256;
  for (size_t start = 0; start < trials.size(); start += kBatch) {
    const size_t n = std::min(kBatch, trials.size() - start);
    std::vector<double> d1(n * dim), d2(n * dim);
    for (size_t i = 0; i < n; ++i) {
      const Trial& t = trials[start + i];
      const auto e = index.find(t.enroll);
      const auto s = index.find(t.test);
      if (e == index.end())
        throw Error(ErrorCategory::kLookup, "no embedding for trial side " + t.enroll);
      if (s == index.end())
        throw Error(ErrorCategory::kLookup, "no embedding for trial side " + t.test);
      if (e->second->vec.size() != dim || s->second->vec.size() != dim)
        throw Error(ErrorCategory::kDimension,
                    "embedding width does not match simnet input_dim");
      std::copy(e->second->vec.begin(), e->second->vec.end(), d1.begin() + i * dim);
      std::copy(s->second->vec.begin(), s->second->vec.end(), d2.begin() + i * dim);
    }
    Tape tape;
    Tensor x1 = Tensor::from({n, dim}, std::move(d1));
    Tensor x2 = Tensor::from({n, dim}, std::move(d2));
    Tensor fwd = net.pair_logits(tape, x1, x2, Mode::kEval);
    Tensor rev = net.pair_logits(tape, x2, x1, Mode::kEval);
    for (size_t i = 0; i < n; ++i) {
      const Trial& t = trials[start + i];
      out.push_back({t.enroll, t.test, 0.5 * (fwd.at(i, 0) + rev.at(i, 0)), t.target, t.keyed});
    }
  }
  return out;
}

}  // namespace svkit
