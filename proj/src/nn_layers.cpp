#include "sketchret/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace sketchret::nn {

namespace {

Matrix xavier(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / (rows + cols));
  Matrix m(rows, cols);
  // column-major fill order is part of the seeded contract
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform_real(rng, -bound, bound);
  }
  return m;
}

void require_cols(const Matrix& x, Eigen::Index cols, const char* where) {
  if (x.cols() != cols) {
    throw std::invalid_argument(std::string(where) + ": expected " + std::to_string(cols) + " features, got " +
                                std::to_string(x.cols()));
  }
}

}  // namespace

Linear init_linear(int in, int out, Rng& rng) { return {xavier(out, in, rng), Vector::Zero(out)}; }

MlpParams init_mlp(int in, int hidden, int out, double dropout, Rng& rng) {
  MlpParams p;
  p.layer1 = init_linear(in, hidden, rng);
  p.layer2 = init_linear(hidden, out, rng);
  p.dropout_rate = dropout;
  return p;
}

TEncoderParams init_t_encoder(int d, Rng& rng) {
  TEncoderParams p;
  p.wq = xavier(d, d, rng);
  p.wk = xavier(d, d, rng);
  p.wv = xavier(d, d, rng);
  p.wo = xavier(d, d, rng);
  p.ffn1 = init_linear(d, 4 * d, rng);
  p.ffn2 = init_linear(4 * d, d, rng);
  p.ln1_gain = Vector::Ones(d);
  p.ln1_bias = Vector::Zero(d);
  p.ln2_gain = Vector::Ones(d);
  p.ln2_bias = Vector::Zero(d);
  return p;
}

Matrix linear_forward(const Linear& l, const Matrix& x) {
  require_cols(x, l.in_dim(), "linear");
  Matrix y = x * l.weight.transpose();
  y.rowwise() += l.bias.transpose();
  return y;
}

Matrix linear_backward(const Linear& l, const Matrix& x, const Matrix& dy, Linear& grad) {
  grad.weight.noalias() += dy.transpose() * x;
  grad.bias += dy.colwise().sum().transpose();
  return dy * l.weight;
}

Matrix mlp_forward(const MlpParams& p, const Matrix& x, bool train_mode, Rng* rng, MlpCache* cache) {
  Matrix pre = linear_forward(p.layer1, x);
  Matrix hidden = pre.cwiseMax(0.0);
  Matrix mask;
  if (train_mode && p.dropout_rate > 0.0) {
    if (rng == nullptr) throw std::invalid_argument("mlp_forward: dropout needs a generator");
    mask.resize(hidden.rows(), hidden.cols());
    const double keep = 1.0 - p.dropout_rate;
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      for (Eigen::Index i = 0; i < mask.rows(); ++i) {
        const bool kept = uniform01(*rng) < keep;
        mask(i, j) = kept ? 1.0 / keep : 0.0;
      }
    }
    hidden = hidden.cwiseProduct(mask);
  }
  Matrix out = linear_forward(p.layer2, hidden);
  if (cache != nullptr) {
    cache->input = x;
    cache->pre_activation = std::move(pre);
    cache->hidden = std::move(hidden);
    cache->mask = std::move(mask);
  }
  return out;
}

Vector mlp_forward(const MlpParams& p, const Vector& x, bool train_mode, Rng* rng) {
  const Matrix row = x.transpose();
  return mlp_forward(p, row, train_mode, rng).row(0).transpose();
}

Matrix mlp_backward(const MlpParams& p, const MlpCache& cache, const Matrix& dy, MlpParams& grad) {
  Matrix dhidden = linear_backward(p.layer2, cache.hidden, dy, grad.layer2);
  if (cache.mask.size() != 0) dhidden = dhidden.cwiseProduct(cache.mask);
  const Matrix dpre = (cache.pre_activation.array() > 0.0).select(dhidden, 0.0);
  return linear_backward(p.layer1, cache.input, dpre, grad.layer1);
}

Matrix layer_norm_forward(const Vector& gain, const Vector& bias, const Matrix& x, LayerNormCache* cache) {
  const Eigen::Index n = x.cols();
  Matrix normalized(x.rows(), n);
  Vector inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).mean();
    const double var = (x.row(r).array() - mean).square().mean();
    inv_std(r) = 1.0 / std::sqrt(var + kLayerNormEps);
    normalized.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = normalized.array().rowwise() * gain.transpose().array();
  y.rowwise() += bias.transpose();
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix layer_norm_backward(const Vector& gain, const LayerNormCache& cache, const Matrix& dy, Vector& dgain,
                           Vector& dbias) {
  const double n = static_cast<double>(dy.cols());
  dgain += (dy.array() * cache.normalized.array()).colwise().sum().transpose().matrix();
  dbias += dy.colwise().sum().transpose();
  const Matrix dxhat = dy.array().rowwise() * gain.transpose().array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double sum = dxhat.row(r).sum();
    const double dot = dxhat.row(r).dot(cache.normalized.row(r));
    dx.row(r) = (cache.inv_std(r) / n) *
                (n * dxhat.row(r).array() - sum - cache.normalized.row(r).array() * dot).matrix();
  }
  return dx;
}

Matrix softmax_rows(const Matrix& scores) {
  Matrix out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double top = scores.row(r).maxCoeff();
    const RowVector e = (scores.row(r).array() - top).exp().matrix();
    out.row(r) = e / e.sum();
  }
  return out;
}

Matrix t_encoder_forward(const TEncoderParams& p, const Matrix& seq, TEncoderCache* cache) {
  if (seq.rows() == 0) throw std::invalid_argument("t_encoder_forward: empty sequence");
  require_cols(seq, p.wq.cols(), "t_encoder");
  TEncoderCache local;
  TEncoderCache& c = cache != nullptr ? *cache : local;
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.wq.cols()));

  c.input = seq;
  c.a = layer_norm_forward(p.ln1_gain, p.ln1_bias, seq, &c.ln1);
  c.q = c.a * p.wq.transpose();
  c.k = c.a * p.wk.transpose();
  c.v = c.a * p.wv.transpose();
  c.attention = softmax_rows(scale * (c.q * c.k.transpose()));
  c.heads = c.attention * c.v;
  c.residual = seq + c.heads * p.wo.transpose();

  c.b = layer_norm_forward(p.ln2_gain, p.ln2_bias, c.residual, &c.ln2);
  c.ffn_pre = linear_forward(p.ffn1, c.b);
  c.ffn_act = c.ffn_pre.cwiseMax(0.0);
  return c.residual + linear_forward(p.ffn2, c.ffn_act);
}

std::vector<Vector> t_encoder_forward(const TEncoderParams& p, const std::vector<Vector>& seq) {
  if (seq.empty()) throw std::invalid_argument("t_encoder_forward: empty sequence");
  Matrix m(static_cast<Eigen::Index>(seq.size()), seq.front().size());
  for (std::size_t i = 0; i < seq.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = seq[i].transpose();
  const Matrix y = t_encoder_forward(p, m);
  std::vector<Vector> out;
  for (Eigen::Index i = 0; i < y.rows(); ++i) out.emplace_back(y.row(i).transpose());
  return out;
}

Matrix t_encoder_backward(const TEncoderParams& p, const TEncoderCache& c, const Matrix& dy,
                          TEncoderParams& grad) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.wq.cols()));

  // feed-forward branch
  Matrix dact = linear_backward(p.ffn2, c.ffn_act, dy, grad.ffn2);
  const Matrix dpre = (c.ffn_pre.array() > 0.0).select(dact, 0.0);
  const Matrix db = linear_backward(p.ffn1, c.b, dpre, grad.ffn1);
  const Matrix dresidual = dy + layer_norm_backward(p.ln2_gain, c.ln2, db, grad.ln2_gain, grad.ln2_bias);

  // attention branch
  grad.wo.noalias() += dresidual.transpose() * c.heads;
  const Matrix dheads = dresidual * p.wo;
  const Matrix dattn = dheads * c.v.transpose();
  const Matrix dv = c.attention.transpose() * dheads;
  Matrix dscores(dattn.rows(), dattn.cols());
  for (Eigen::Index r = 0; r < dattn.rows(); ++r) {
    const double dot = dattn.row(r).dot(c.attention.row(r));
    dscores.row(r) = c.attention.row(r).array() * (dattn.row(r).array() - dot);
  }
  const Matrix dq = scale * (dscores * c.k);
  const Matrix dk = scale * (dscores.transpose() * c.q);
  grad.wq.noalias() += dq.transpose() * c.a;
  grad.wk.noalias() += dk.transpose() * c.a;
  grad.wv.noalias() += dv.transpose() * c.a;
  const Matrix da = dq * p.wq + dk * p.wk + dv * p.wv;
  return dresidual + layer_norm_backward(p.ln1_gain, c.ln1, da, grad.ln1_gain, grad.ln1_bias);
}

Vector object_embed(const ObjectEncoderParams& p, const RingFeatures& rings, bool train_mode, Rng* rng,
                    ObjectCache* cache) {
  if (static_cast<int>(rings.size()) != p.ring_count) {
    throw std::invalid_argument("object_embed: expected " + std::to_string(p.ring_count) + " rings, got " +
                                std::to_string(rings.size()));
  }
  ObjectCache local;
  ObjectCache& c = cache != nullptr ? *cache : local;
  c.view_input.assign(rings.size(), {});
  c.ring.assign(rings.size(), {});

  const Eigen::Index d = p.ring_encoder.wq.cols();
  Matrix ring_vectors(p.ring_count, d);
  for (std::size_t r = 0; r < rings.size(); ++r) {
    if (rings[r].rows() != p.views_per_ring) {
      throw std::invalid_argument("object_embed: ring " + std::to_string(r) + " has " +
                                  std::to_string(rings[r].rows()) + " views, expected " +
                                  std::to_string(p.views_per_ring));
    }
    const Matrix views = mlp_forward(p.view_input, rings[r], train_mode, rng, &c.view_input[r]);
    const Matrix encoded = t_encoder_forward(p.ring_encoder, views, &c.ring[r]);
    ring_vectors.row(static_cast<Eigen::Index>(r)) = encoded.colwise().mean();
  }
  Matrix h = t_encoder_forward(p.object_encoders[0], ring_vectors, &c.object[0]);
  h = t_encoder_forward(p.object_encoders[1], h, &c.object[1]);
  const Matrix pooled = h.colwise().mean();
  return mlp_forward(p.projection, pooled, train_mode, rng, &c.projection).row(0).transpose();
}

void object_embed_backward(const ObjectEncoderParams& p, const ObjectCache& c, const Vector& dz,
                           ObjectEncoderParams& grad) {
  const Matrix dpooled = mlp_backward(p.projection, c.projection, dz.transpose(), grad.projection);
  const auto rings = static_cast<Eigen::Index>(c.ring.size());
  Matrix dh = dpooled.replicate(rings, 1) / static_cast<double>(rings);
  dh = t_encoder_backward(p.object_encoders[1], c.object[1], dh, grad.object_encoders[1]);
  const Matrix dring = t_encoder_backward(p.object_encoders[0], c.object[0], dh, grad.object_encoders[0]);
  for (std::size_t r = 0; r < c.ring.size(); ++r) {
    const Eigen::Index views = c.ring[r].input.rows();
    const Matrix dencoded = dring.row(static_cast<Eigen::Index>(r)).replicate(views, 1) / static_cast<double>(views);
    const Matrix dviews = t_encoder_backward(p.ring_encoder, c.ring[r], dencoded, grad.ring_encoder);
    mlp_backward(p.view_input, c.view_input[r], dviews, grad.view_input);
  }
}

}  // namespace sketchret::nn
