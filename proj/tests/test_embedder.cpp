#include "doctest.h"
#include "grad_check.hpp"
#include "test_support.hpp"

#include "sketchret/checkpoint.hpp"
#include "sketchret/binary_io.hpp"
#include "sketchret/optim.hpp"

#include <cmath>
#include <numeric>
#include <set>

using namespace sketchret;
using nn::Matrix;
using nn::Vector;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

// ---- straight-line oracles: explicit loops, no Eigen expressions ----

std::vector<double> naive_linear(const nn::Linear& l, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(l.out_dim()));
  for (Eigen::Index o = 0; o < l.out_dim(); ++o) {
    double s = l.bias(o);
    for (Eigen::Index i = 0; i < l.in_dim(); ++i) s += l.weight(o, i) * x[static_cast<std::size_t>(i)];
    y[static_cast<std::size_t>(o)] = s;
  }
  return y;
}

std::vector<double> naive_mlp(const nn::MlpParams& p, std::vector<double> x) {
  x = naive_linear(p.layer1, x);
  for (auto& v : x) v = v > 0.0 ? v : 0.0;
  return naive_linear(p.layer2, x);
}

using Seq = std::vector<std::vector<double>>;

std::vector<double> naive_layer_norm(const Vector& g, const Vector& b, const std::vector<double>& x) {
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= static_cast<double>(x.size());
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = g(static_cast<Eigen::Index>(i)) * (x[i] - mean) / std::sqrt(var + nn::kLayerNormEps) +
           b(static_cast<Eigen::Index>(i));
  }
  return y;
}

std::vector<double> matvec(const Matrix& w, const std::vector<double>& x) {
  std::vector<double> y(static_cast<std::size_t>(w.rows()), 0.0);
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    for (Eigen::Index c = 0; c < w.cols(); ++c) y[static_cast<std::size_t>(r)] += w(r, c) * x[static_cast<std::size_t>(c)];
  }
  return y;
}

Seq naive_t_encoder(const nn::TEncoderParams& p, const Seq& x) {
  const std::size_t n = x.size();
  const std::size_t d = x[0].size();
  Seq a(n), q(n), k(n), v(n), out(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = naive_layer_norm(p.ln1_gain, p.ln1_bias, x[i]);
    q[i] = matvec(p.wq, a[i]);
    k[i] = matvec(p.wk, a[i]);
    v[i] = matvec(p.wv, a[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> s(n);
    double top = -1e300;
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < d; ++c) dot += q[i][c] * k[j][c];
      s[j] = dot / std::sqrt(static_cast<double>(d));
      top = std::max(top, s[j]);
    }
    double z = 0.0;
    for (auto& e : s) z += (e = std::exp(e - top));
    std::vector<double> head(d, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t c = 0; c < d; ++c) head[c] += s[j] / z * v[j][c];
    }
    const std::vector<double> att = matvec(p.wo, head);
    std::vector<double> res(d);
    for (std::size_t c = 0; c < d; ++c) res[c] = x[i][c] + att[c];
    std::vector<double> h = naive_linear(p.ffn1, naive_layer_norm(p.ln2_gain, p.ln2_bias, res));
    for (auto& e : h) e = e > 0.0 ? e : 0.0;
    const std::vector<double> f = naive_linear(p.ffn2, h);
    out[i].resize(d);
    for (std::size_t c = 0; c < d; ++c) out[i][c] = res[c] + f[c];
  }
  return out;
}

std::vector<double> mean_rows(const Seq& s) {
  std::vector<double> m(s[0].size(), 0.0);
  for (const auto& r : s) {
    for (std::size_t c = 0; c < r.size(); ++c) m[c] += r[c] / static_cast<double>(s.size());
  }
  return m;
}

std::vector<double> naive_object_embed(const nn::ObjectEncoderParams& p, const nn::RingFeatures& rings) {
  Seq ring_vectors;
  for (const auto& ring : rings) {
    Seq views;
    for (Eigen::Index r = 0; r < ring.rows(); ++r) {
      std::vector<double> x(static_cast<std::size_t>(ring.cols()));
      for (Eigen::Index c = 0; c < ring.cols(); ++c) x[static_cast<std::size_t>(c)] = ring(r, c);
      views.push_back(naive_mlp(p.view_input, x));
    }
    ring_vectors.push_back(mean_rows(naive_t_encoder(p.ring_encoder, views)));
  }
  Seq h = naive_t_encoder(p.object_encoders[0], ring_vectors);
  h = naive_t_encoder(p.object_encoders[1], h);
  return naive_mlp(p.projection, mean_rows(h));
}

void make_identity_encoder(nn::TEncoderParams& p) {
  p.wo.setZero();
  p.ffn2.weight.setZero();
  p.ffn2.bias.setZero();
}

}  // namespace

TEST_CASE("mlp forward") {
  Rng rng(1);
  SUBCASE("identity weights give ReLU of the input") {
    nn::MlpParams p;
    p.layer1 = {Matrix::Identity(3, 3), Vector::Zero(3)};
    p.layer2 = {Matrix::Identity(3, 3), Vector::Zero(3)};
    const Vector x = Vector::Map(std::vector<double>{-1.0, 2.0, 0.5}.data(), 3);
    const Vector y = nn::mlp_forward(p, x, false, nullptr);
    CHECK(y(0) == 0.0);
    CHECK(y(1) == 2.0);
    CHECK(y(2) == 0.5);
  }
  SUBCASE("dropout rate 1 leaves the output bias") {
    nn::MlpParams p = nn::init_mlp(4, 6, 3, 1.0, rng);
    p.layer2.bias = Vector::Constant(3, 0.25);
    nn::MlpCache cache;
    const Matrix y = nn::mlp_forward(p, random_matrix(rng, 5, 4), true, &rng, &cache);
    CHECK(cache.hidden.isZero());
    for (Eigen::Index i = 0; i < y.size(); ++i) CHECK(y.data()[i] == 0.25);
  }
  SUBCASE("eval mode matches the dense oracle and ignores dropout") {
    for (int t = 0; t < 10; ++t) {
      nn::MlpParams p = nn::init_mlp(5, 9, 4, 0.5, rng);
      p.layer1.bias = random_matrix(rng, 9, 1);
      p.layer2.bias = random_matrix(rng, 4, 1);
      const Matrix x = random_matrix(rng, 3, 5);
      const Matrix y = nn::mlp_forward(p, x, false, nullptr);
      for (Eigen::Index r = 0; r < 3; ++r) {
        std::vector<double> row(5);
        for (int c = 0; c < 5; ++c) row[static_cast<std::size_t>(c)] = x(r, c);
        const auto expect = naive_mlp(p, row);
        for (int c = 0; c < 4; ++c) CHECK(std::abs(y(r, c) - expect[static_cast<std::size_t>(c)]) < 1e-6);
      }
    }
  }
}

TEST_CASE("t-encoder") {
  Rng rng(2);
  SUBCASE("zero output projections give the identity") {
    nn::TEncoderParams p = nn::init_t_encoder(6, rng);
    make_identity_encoder(p);
    const Matrix x = random_matrix(rng, 5, 6);
    CHECK(nn::t_encoder_forward(p, x) == x);
  }
  SUBCASE("permutation equivariance") {
    for (int t = 0; t < 10; ++t) {
      const nn::TEncoderParams p = nn::init_t_encoder(8, rng);
      const Matrix x = random_matrix(rng, 6, 8);
      std::vector<int> perm(6);
      std::iota(perm.begin(), perm.end(), 0);
      shuffle(perm.begin(), perm.end(), rng);
      Matrix px(6, 8);
      for (int i = 0; i < 6; ++i) px.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
      const Matrix y = nn::t_encoder_forward(p, x);
      const Matrix py = nn::t_encoder_forward(p, px);
      for (int i = 0; i < 6; ++i) CHECK((py.row(i) - y.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SUBCASE("attention rows sum to one") {
    const nn::TEncoderParams p = nn::init_t_encoder(4, rng);
    nn::TEncoderCache cache;
    nn::t_encoder_forward(p, random_matrix(rng, 7, 4), &cache);
    for (Eigen::Index r = 0; r < cache.attention.rows(); ++r) CHECK(std::abs(cache.attention.row(r).sum() - 1.0) < 1e-9);
  }
  SUBCASE("matches the straight-line oracle") {
    nn::TEncoderParams p = nn::init_t_encoder(5, rng);
    p.ln1_bias = random_matrix(rng, 5, 1);
    p.ln2_gain = random_matrix(rng, 5, 1);
    p.ffn1.bias = random_matrix(rng, 20, 1);
    const Matrix x = random_matrix(rng, 4, 5);
    Seq s(4, std::vector<double>(5));
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 5; ++c) s[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = x(r, c);
    }
    const Seq expect = naive_t_encoder(p, s);
    const Matrix y = nn::t_encoder_forward(p, x);
    for (int r = 0; r < 4; ++r) {
      for (int c = 0; c < 5; ++c) CHECK(std::abs(y(r, c) - expect[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]) < 1e-9);
    }
  }
}

TEST_CASE("object encoder") {
  Rng rng(3);
  ModelConfig mc;
  mc.object_feature_dim = 6;
  mc.model_dim = 8;
  mc.hidden_dim = 10;
  mc.embed_dim = 5;
  Rng init(4);
  Model m = init_model(mc, init);
  SUBCASE("identical views through identity encoders give the projected feature") {
    make_identity_encoder(m.object.ring_encoder);
    for (auto& e : m.object.object_encoders) make_identity_encoder(e);
    const Matrix feature = random_matrix(rng, 1, 6);
    nn::RingFeatures rings(3, feature.replicate(12, 1));
    const Vector z = embed_object(m, rings);
    const Matrix expect = nn::mlp_forward(m.object.projection, nn::mlp_forward(m.object.view_input, feature, false, nullptr),
                                          false, nullptr);
    CHECK((z.transpose() - expect).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("output has dimension P and matches the straight-line oracle") {
    for (int t = 0; t < 3; ++t) {
      for_each_param([&](const std::string&, auto& x) { x += 0.1 * random_matrix(rng, x.rows(), x.cols()); }, m);
      nn::RingFeatures rings;
      for (int r = 0; r < 3; ++r) rings.push_back(random_matrix(rng, 12, 6));
      const Vector z = embed_object(m, rings);
      REQUIRE(z.size() == 5);
      const auto expect = naive_object_embed(m.object, rings);
      for (int i = 0; i < 5; ++i) CHECK(std::abs(z(i) - expect[static_cast<std::size_t>(i)]) < 1e-6);
    }
  }
  SUBCASE("shape errors") {
    nn::RingFeatures two(2, random_matrix(rng, 12, 6));
    CHECK_THROWS(embed_object(m, two));
    nn::RingFeatures short_ring(3, random_matrix(rng, 11, 6));
    CHECK_THROWS(embed_object(m, short_ring));
    CHECK_THROWS(embed_sketch(m, Vector::Zero(3)));
  }
  CHECK(embed_sketch(m, Vector::Ones(mc.sketch_feature_dim)).size() == mc.embed_dim);
}

TEST_CASE("nt-xent hand-evaluated cases") {
  ContrastiveBatch b;
  b.embeddings = Matrix(3, 2);
  b.embeddings << 1, 0, 1, 0, 0, 1;
  b.positives = {{1}, {0}, {}};
  b.temperature = 1.0;
  CHECK(std::abs(nt_xent_loss(b).loss - (-1.0)) < 1e-9);
  b.temperature = 0.5;
  CHECK(std::abs(nt_xent_loss(b).loss - (-2.0)) < 1e-9);

  ContrastiveBatch o;
  o.embeddings = Matrix::Identity(3, 3);
  o.positives = {{1}, {0}, {}};
  o.temperature = 1.0;
  CHECK(std::abs(nt_xent_loss(o).loss) < 1e-12);

  // standard form keeps the positive in the denominator: -log(e / (e + 1))
  b.temperature = 1.0;
  b.include_positive_in_denominator = true;
  CHECK(nt_xent_loss(b).loss == doctest::Approx(-std::log(std::exp(1.0) / (std::exp(1.0) + 1.0))));
}

TEST_CASE("nt-xent treats a zero embedding as similar to nothing") {
  ContrastiveBatch b;
  b.embeddings = Matrix(3, 2);
  b.embeddings << 1, 0, 2, 0, 0, 0;
  b.positives = {{1}, {0}, {}};
  b.temperature = 1.0;
  const LossResult r = nt_xent_loss(b);
  CHECK(std::abs(r.loss - (-1.0)) < 1e-9);
  CHECK(r.grad.allFinite());
  b.positives = {{2}, {}, {0}};
  const LossResult z = nt_xent_loss(b);
  CHECK(std::isfinite(z.loss));
  CHECK(z.grad.allFinite());
}

TEST_CASE("nt-xent input validation") {
  ContrastiveBatch b;
  b.embeddings = Matrix::Identity(3, 3);
  b.positives = {{1}, {}, {}};
  CHECK_THROWS(nt_xent_loss(b));  // not symmetric
  b.positives = {{0}, {}, {}};
  CHECK_THROWS(nt_xent_loss(b));  // self positive
  b.positives = {{}, {}, {}};
  CHECK_THROWS(nt_xent_loss(b));  // nothing to learn
  b.positives = {{1, 2}, {0, 2}, {0, 1}};
  CHECK_THROWS(nt_xent_loss(b));  // no negatives
}

TEST_CASE("positives from labels are symmetric and exclude the anchor") {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    std::vector<int> labels(10);
    for (auto& l : labels) l = static_cast<int>(uniform_index(rng, 4));
    const auto pos = positives_from_labels(labels);
    for (int i = 0; i < 10; ++i) {
      const std::set<int> pi(pos[static_cast<std::size_t>(i)].begin(), pos[static_cast<std::size_t>(i)].end());
      CHECK(pi.count(i) == 0);
      for (int j = 0; j < 10; ++j) {
        const auto& pj = pos[static_cast<std::size_t>(j)];
        const bool j_in_i = pi.count(j) > 0;
        const bool i_in_j = std::find(pj.begin(), pj.end(), i) != pj.end();
        CHECK(j_in_i == i_in_j);
        if (i != j) CHECK(j_in_i == (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]));
      }
    }
  }
}

TEST_CASE("nt-xent gradients match central differences") {
  Rng rng(6);
  for (int t = 0; t < 24; ++t) {
    const int n = 2 + static_cast<int>(uniform_index(rng, 3));
    const int p = 2 + static_cast<int>(uniform_index(rng, 7));
    const auto r = grad_check::nt_xent_check(rng, n, p, uniform_real(rng, 0.2, 1.5), t % 2 == 0);
    CHECK(r.rel_error < 1e-4);
  }
}

TEST_CASE("nt-xent is invariant to scaling one embedding") {
  Rng rng(7);
  for (int t = 0; t < 10; ++t) {
    ContrastiveBatch b;
    b.embeddings = random_matrix(rng, 6, 4);
    b.positives = positives_from_labels({0, 0, 1, 1, 2, 0});
    const double base = nt_xent_loss(b).loss;
    b.embeddings.row(static_cast<Eigen::Index>(uniform_index(rng, 6))) *= uniform_real(rng, 0.1, 10.0);
    CHECK(std::abs(nt_xent_loss(b).loss - base) < 1e-9);
  }
}

TEST_CASE("end-to-end gradient through the object encoder") {
  Rng rng(8);
  for (int t = 0; t < 2; ++t) {
    auto instance = grad_check::random_instance(rng, 8);
    const auto r = grad_check::model_check(instance);
    CHECK(r.parameters == parameter_count(instance.model.object) + parameter_count(instance.model.sketch));
    CHECK(r.rel_error < 1e-4);
  }
}

TEST_CASE("adamw") {
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  std::vector<double> theta{0.5};
  std::vector<double> m{0.0}, v{0.0};
  const std::vector<double> g{1.0};
  adamw_update(theta, g, m, v, cfg, 1e-3, 1);
  CHECK(theta[0] - 0.5 == doctest::Approx(-1e-3).epsilon(1e-6));

  std::vector<double> still{0.7};
  std::vector<double> m0{0.0}, v0{0.0};
  const std::vector<double> zero{0.0};
  adamw_update(still, zero, m0, v0, cfg, 1e-3, 1);
  CHECK(still[0] == 0.7);

  cfg.weight_decay = 0.1;
  std::vector<double> decayed{2.0};
  adamw_update(decayed, zero, m0, v0, cfg, 1e-2, 1);
  CHECK(decayed[0] == doctest::Approx(2.0 * (1.0 - 1e-2 * 0.1)));
}

TEST_CASE("step lr schedule") {
  CHECK(step_lr(1e-3, 10, 0.1, 9) == doctest::Approx(1e-3));
  CHECK(step_lr(1e-3, 10, 0.1, 10) == doctest::Approx(1e-4));
  CHECK(step_lr(1e-3, 10, 0.1, 25) == doctest::Approx(1e-5));
}

TEST_CASE("max voting ensemble") {
  const std::vector<double> s{0.2, 0.9, 0.5, 0.1, 0.4};
  CHECK(max_vote(s) == 0.9);
  CHECK(max_vote(std::vector<double>{0.3}) == 0.3);
  CHECK_THROWS(max_vote(std::vector<double>{}));

  Rng rng(9);
  ModelConfig mc;
  mc.object_feature_dim = 4;
  mc.sketch_feature_dim = 4;
  mc.model_dim = 8;
  mc.hidden_dim = 8;
  mc.embed_dim = 6;
  mc.ring_count = 2;
  mc.views_per_ring = 3;
  std::vector<Model> models;
  for (int k = 0; k < 4; ++k) {
    models.push_back(init_model(mc, rng));
    // nonzero biases keep every embedding away from zero
    for_each_param([&](const std::string&, auto& x) { x += 0.3 * random_matrix(rng, x.rows(), x.cols()); }, models.back());
  }
  for (int t = 0; t < 10; ++t) {
    nn::RingFeatures obj{random_matrix(rng, 3, 4), random_matrix(rng, 3, 4)};
    const Vector sk = random_matrix(rng, 4, 1);
    const double ens = ensemble_similarity(models, obj, sk);
    for (const auto& mdl : models) {
      const Vector a = embed_object(mdl, obj);
      const Vector b = embed_sketch(mdl, sk);
      CHECK(ens >= a.dot(b) / (a.norm() * b.norm()) - 1e-12);
    }
    // adding models never lowers the ensemble score
    std::vector<Model> fewer(models.begin(), models.begin() + 1);
    CHECK(ensemble_similarity(models, obj, sk) >= ensemble_similarity(fewer, obj, sk) - 1e-12);
  }
}

TEST_CASE("k-fold partition") {
  Rng rng(10);
  const auto folds = kfold_partition(50, 5, rng);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    CHECK(f.size() == 10);
    for (auto i : f) CHECK(seen.insert(i).second);
  }
  CHECK(seen.size() == 50);
  CHECK_THROWS(kfold_partition(3, 5, rng));
}

namespace {

// Separable toy set: each label has a distinct one-hot-like feature pattern on both sides.
TrainingData toy_data(int labels, int per_label, int dim, Rng& rng) {
  TrainingData data;
  for (int l = 0; l < labels; ++l) {
    nn::RingFeatures rings;
    for (int r = 0; r < 2; ++r) {
      Matrix v = Matrix::Constant(3, dim, 0.05);
      v.col(l % dim).setConstant(1.0);
      rings.push_back(v);
    }
    data.objects.push_back(rings);
    for (int k = 0; k < per_label; ++k) {
      TrainingPair p;
      p.sketch = Vector::Constant(dim, 0.05);
      p.sketch(l % dim) = 1.0 + 0.05 * standard_normal(rng);
      p.object = static_cast<std::size_t>(l);
      p.label = l;
      data.pairs.push_back(p);
    }
  }
  return data;
}

TrainConfig toy_config() {
  TrainConfig cfg;
  cfg.model.object_feature_dim = 10;
  cfg.model.sketch_feature_dim = 10;
  cfg.model.model_dim = 8;
  cfg.model.hidden_dim = 16;
  cfg.model.embed_dim = 8;
  cfg.model.ring_count = 2;
  cfg.model.views_per_ring = 3;
  cfg.epochs = 8;
  cfg.batch_size = 10;
  cfg.adamw.lr = 5e-3;
  cfg.seed = 77;
  return cfg;
}

}  // namespace

TEST_CASE("training on a separable toy set") {
  Rng rng(11);
  const TrainingData data = toy_data(10, 5, 10, rng);
  TrainConfig cfg = toy_config();
  const auto folds = train_kfold(data, cfg);
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> covered;
  for (const auto& f : folds) {
    for (auto i : f.validation) CHECK(covered.insert(i).second);
    REQUIRE(f.log.size() == static_cast<std::size_t>(cfg.epochs + 1));
    CHECK(f.log.front().epoch == 0);
    CHECK(f.log.back().train_loss < f.log[1].train_loss);
    CHECK(f.log.back().val_loss < f.log.front().val_loss);
  }
  CHECK(covered.size() == data.pairs.size());

  SUBCASE("same seed gives identical weights; threads do not matter") {
    TrainConfig threaded = cfg;
    threaded.threads = 3;
    const auto again = train_kfold(data, threaded);
    for (std::size_t k = 0; k < folds.size(); ++k) {
      for_each_param([](const std::string& name, const auto& a, const auto& b) { CHECK_MESSAGE(a == b, name); },
                     folds[k].model, again[k].model);
    }
  }
  SUBCASE("log csv") {
    const std::string csv = training_log_csv(folds);
    CHECK(csv.rfind("epoch,fold,lr,train_loss,val_loss\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 5 * (cfg.epochs + 1));
  }
}

TEST_CASE("training rejects unusable inputs") {
  Rng rng(12);
  TrainConfig cfg = toy_config();
  CHECK_THROWS(train_kfold(toy_data(3, 2, 10, rng), cfg));  // fewer labels than folds
  TrainingData bad = toy_data(10, 5, 10, rng);
  bad.pairs[0].object = 99;
  CHECK_THROWS(train_kfold(bad, cfg));
  cfg.gamma = 2.0;
  CHECK_THROWS(cfg.validate());
  cfg = toy_config();
  cfg.folds = 1;
  CHECK_THROWS(cfg.validate());
}

TEST_CASE("train config json round trip") {
  TrainConfig cfg = toy_config();
  cfg.temperature = 0.3;
  const TrainConfig back = TrainConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("checkpoint round trip") {
  Rng rng(13);
  ModelConfig mc;
  mc.model_dim = 8;
  mc.hidden_dim = 16;
  mc.embed_dim = 8;
  const Model m = init_model(mc, rng);
  nlohmann::json meta{{"fold", 2}};
  const auto bytes = encode_checkpoint(m, meta);
  nlohmann::json meta_back;
  const Model back = decode_checkpoint(bytes, &meta_back);
  CHECK(meta_back == meta);
  CHECK(back.config.to_json() == mc.to_json());
  for_each_param(
      [](const std::string& name, const auto& a, const auto& b) {
        REQUIRE(a.size() == b.size());
        for (Eigen::Index i = 0; i < a.size(); ++i) {
          CHECK_MESSAGE(static_cast<float>(a.data()[i]) == b.data()[i], name);
        }
      },
      m, back);
  // float32 weights: re-encoding the decoded model is byte-identical
  CHECK(encode_checkpoint(back, meta) == bytes);

  auto corrupt = bytes;
  corrupt[1] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(corrupt), FormatError);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 4);
  CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
  auto trailing = bytes;
  trailing.push_back(0);
  CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);

  test_support::TempDir dir("ckpt");
  const std::string path = (dir.path() / "m.skck").string();
  save_checkpoint(m, path, meta);
  CHECK(encode_checkpoint(load_checkpoint(path)) == encode_checkpoint(back));
}
