#pragma once

#include "sketchret/random.hpp"

#include <Eigen/Core>

#include <array>
#include <concepts>
#include <string>
#include <type_traits>
#include <vector>

namespace sketchret::nn {

// Rows are samples (or sequence positions); all layers use y = x W^T + b.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct Linear {
  Matrix weight;  // out x in
  Vector bias;    // out

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

/// Linear -> ReLU -> dropout -> Linear.
struct MlpParams {
  Linear layer1;
  Linear layer2;
  double dropout_rate = 0.0;
};

/// Pre-norm transformer encoder block with single-head attention and a 4d feed-forward.
struct TEncoderParams {
  Matrix wq, wk, wv, wo;  // d x d
  Linear ffn1;            // d -> 4d
  Linear ffn2;            // 4d -> d
  Vector ln1_gain, ln1_bias, ln2_gain, ln2_bias;
};

struct ObjectEncoderParams {
  MlpParams view_input;  // per-view feature -> d
  TEncoderParams ring_encoder;
  std::array<TEncoderParams, 2> object_encoders;
  MlpParams projection;  // d -> P
  int ring_count = 3;
  int views_per_ring = 12;
};

template <class T, class U>
concept Param = std::same_as<std::remove_const_t<T>, U>;

// Parallel traversal over identically-shaped parameter structs: f(name, a.x, b.x, ...).
template <class F, class First, class... Rest>
  requires Param<First, Linear>
void for_each_param(F&& f, const std::string& name, First& a, Rest&... rest) {
  f(name + ".weight", a.weight, rest.weight...);
  f(name + ".bias", a.bias, rest.bias...);
}

template <class F, class First, class... Rest>
  requires Param<First, MlpParams>
void for_each_param(F&& f, const std::string& name, First& a, Rest&... rest) {
  for_each_param(f, name + ".layer1", a.layer1, rest.layer1...);
  for_each_param(f, name + ".layer2", a.layer2, rest.layer2...);
}

template <class F, class First, class... Rest>
  requires Param<First, TEncoderParams>
void for_each_param(F&& f, const std::string& name, First& a, Rest&... rest) {
  f(name + ".wq", a.wq, rest.wq...);
  f(name + ".wk", a.wk, rest.wk...);
  f(name + ".wv", a.wv, rest.wv...);
  f(name + ".wo", a.wo, rest.wo...);
  for_each_param(f, name + ".ffn1", a.ffn1, rest.ffn1...);
  for_each_param(f, name + ".ffn2", a.ffn2, rest.ffn2...);
  f(name + ".ln1_gain", a.ln1_gain, rest.ln1_gain...);
  f(name + ".ln1_bias", a.ln1_bias, rest.ln1_bias...);
  f(name + ".ln2_gain", a.ln2_gain, rest.ln2_gain...);
  f(name + ".ln2_bias", a.ln2_bias, rest.ln2_bias...);
}

template <class F, class First, class... Rest>
  requires Param<First, ObjectEncoderParams>
void for_each_param(F&& f, const std::string& name, First& a, Rest&... rest) {
  for_each_param(f, name + ".view_input", a.view_input, rest.view_input...);
  for_each_param(f, name + ".ring_encoder", a.ring_encoder, rest.ring_encoder...);
  for (std::size_t i = 0; i < a.object_encoders.size(); ++i) {
    for_each_param(f, name + ".object_encoder" + std::to_string(i), a.object_encoders[i],
                   rest.object_encoders[i]...);
  }
  for_each_param(f, name + ".projection", a.projection, rest.projection...);
}

/// Same shapes, every entry zero.
template <class T>
T zeros_like(const T& params) {
  T out = params;
  for_each_param([](const std::string&, auto& x) { x.setZero(); }, "", out);
  return out;
}

template <class T>
std::size_t parameter_count(const T& params) {
  std::size_t n = 0;
  for_each_param([&](const std::string&, const auto& x) { n += static_cast<std::size_t>(x.size()); }, "",
                 params);
  return n;
}

// ---- initialization (Xavier-uniform weights, zero biases, unit layer-norm gains) ----

Linear init_linear(int in, int out, Rng& rng);
MlpParams init_mlp(int in, int hidden, int out, double dropout, Rng& rng);
TEncoderParams init_t_encoder(int d, Rng& rng);

// ---- layers ----

Matrix linear_forward(const Linear& l, const Matrix& x);
/// Accumulates into `grad`, returns dL/dx.
Matrix linear_backward(const Linear& l, const Matrix& x, const Matrix& dy, Linear& grad);

struct MlpCache {
  Matrix input;
  Matrix pre_activation;
  Matrix hidden;  // after ReLU and dropout
  Matrix mask;    // dropout scale per hidden unit (0 or 1/(1-rate)); empty in eval mode
};

/// Dropout is applied only when `train_mode` is set; eval mode is deterministic and draws
/// nothing from `rng`.
Matrix mlp_forward(const MlpParams& p, const Matrix& x, bool train_mode, Rng* rng, MlpCache* cache = nullptr);
Vector mlp_forward(const MlpParams& p, const Vector& x, bool train_mode, Rng* rng);
Matrix mlp_backward(const MlpParams& p, const MlpCache& cache, const Matrix& dy, MlpParams& grad);

struct LayerNormCache {
  Matrix normalized;
  Vector inv_std;
};

inline constexpr double kLayerNormEps = 1e-5;

Matrix layer_norm_forward(const Vector& gain, const Vector& bias, const Matrix& x, LayerNormCache* cache);
Matrix layer_norm_backward(const Vector& gain, const LayerNormCache& cache, const Matrix& dy, Vector& dgain,
                           Vector& dbias);

Matrix softmax_rows(const Matrix& scores);

struct TEncoderCache {
  Matrix input;
  LayerNormCache ln1;
  Matrix a, q, k, v, attention, heads;
  Matrix residual;  // x + attention branch
  LayerNormCache ln2;
  Matrix b, ffn_pre, ffn_act;
};

/// x + SelfAttention(LN1(x)), then + FFN(LN2(.)). No positional encoding.
Matrix t_encoder_forward(const TEncoderParams& p, const Matrix& seq, TEncoderCache* cache = nullptr);
std::vector<Vector> t_encoder_forward(const TEncoderParams& p, const std::vector<Vector>& seq);
Matrix t_encoder_backward(const TEncoderParams& p, const TEncoderCache& cache, const Matrix& dy,
                          TEncoderParams& grad);

/// Views of one object grouped by ring: ring_count matrices of views_per_ring x feature_dim.
using RingFeatures = std::vector<Matrix>;

struct ObjectCache {
  std::vector<MlpCache> view_input;
  std::vector<TEncoderCache> ring;
  std::array<TEncoderCache, 2> object;
  MlpCache projection;
};

Vector object_embed(const ObjectEncoderParams& p, const RingFeatures& rings, bool train_mode = false,
                    Rng* rng = nullptr, ObjectCache* cache = nullptr);
void object_embed_backward(const ObjectEncoderParams& p, const ObjectCache& cache, const Vector& dz,
                           ObjectEncoderParams& grad);

}  // namespace sketchret::nn
