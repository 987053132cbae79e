#include "motionseq/seq2seq.hpp"

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "motionseq/baselines.hpp"
#include "motionseq/checkpoint.hpp"
#include "motionseq/errors.hpp"
#include "motionseq/synthetic.hpp"
#include "support/oracles.hpp"

using namespace motionseq;

namespace {

Tensor2 random_tensor(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor2 t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return t;
}

ModelConfig tiny_config() {
  ModelConfig c;
  c.hidden = 12;
  c.joint_width = 8;
  c.seq_in = 5;
  c.seq_out = 4;
  c.batch = 2;
  return c;
}

Batch random_batch(Rng& rng, const ModelConfig& c) {
  Batch b;
  for (int t = 0; t < c.seq_in; ++t) b.encoder_inputs.push_back(random_tensor(rng, c.batch, c.joint_width));
  for (int t = 0; t < c.seq_out; ++t) b.targets.push_back(random_tensor(rng, c.batch, c.joint_width));
  if (c.supervised()) {
    b.onehot = Tensor2::Zero(c.batch, c.num_actions);
    for (int i = 0; i < c.batch; ++i) b.onehot(i, (3 * i + 1) % c.num_actions) = 1.0;
    for (Tensor2& x : b.encoder_inputs) {
      Tensor2 wide(c.batch, c.input_width());
      wide << x, b.onehot;
      x = wide;
    }
  }
  return b;
}

// Largest relative error between analytic and central-difference gradients
// over every parameter entry.
double gradient_check(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams params = ModelParams::init(rng, config);
  // Larger-than-init weights so every gate is away from its linear regime.
  for (Tensor2* t : params.tensors()) *t += random_tensor(rng, t->rows(), t->cols(), 0.2);
  const Batch batch = random_batch(rng, config);
  const LossAndGradients lg = loss_and_gradients(params, config, batch);
  const auto grads = lg.grads.tensors();
  auto tensors = params.tensors();
  double worst = 0.0;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const Tensor2 numeric =
        oracles::finite_difference([&] { return training_loss(params, config, batch); }, *tensors[i]);
    worst = std::max(worst, oracles::max_relative_error(*grads[i], numeric));
  }
  return worst;
}

}  // namespace

TEST_CASE("encode") {
  const GruParams zero = GruParams::zeros(3, 4, 3);
  const std::vector<Tensor2> one_step{Tensor2::Constant(2, 3, 1.0)};
  CHECK(encode(one_step, zero) == Tensor2::Zero(2, 4));

  Rng rng(1);
  const GruParams p = init_params(rng, 3, 4, 3);
  const std::vector<Tensor2> xs{random_tensor(rng, 2, 3), random_tensor(rng, 2, 3)};
  const Tensor2 manual = gru_cell(xs[1], gru_cell(xs[0], Tensor2::Zero(2, 4), p), p);
  CHECK(encode(xs, p) == manual);
  CHECK(encode(xs, p) == encode(xs, p));
  CHECK_THROWS_AS(encode(std::vector<Tensor2>{}, p), InvalidInput);
}

TEST_CASE("decode residual with a zero output decoder repeats the last frame") {
  Rng rng(2);
  GruParams p = init_params(rng, 5, 6, 5);
  p.w_out.setZero();
  p.b_out.setZero();
  const Tensor2 last = random_tensor(rng, 3, 5);
  const auto preds = decode(random_tensor(rng, 3, 6), last, Tensor2(), 4, p, true);
  REQUIRE(preds.size() == 4);
  for (const Tensor2& pr : preds) CHECK(pr == last);
}

TEST_CASE("decode without residual and constant bias outputs the bias") {
  Rng rng(3);
  GruParams p = init_params(rng, 5, 6, 5);
  p.w_out.setZero();
  p.b_out = random_tensor(rng, 1, 5);
  const auto preds = decode(Tensor2::Zero(2, 6), random_tensor(rng, 2, 5), Tensor2(), 3, p, false);
  for (const Tensor2& pr : preds) {
    for (Eigen::Index i = 0; i < 2; ++i) CHECK(pr.row(i) == p.b_out.row(0));
  }
}

TEST_CASE("decode matches a hand-unrolled two-step computation with feedback") {
  Rng rng(4);
  const GruParams p = init_params(rng, 4 + 2, 5, 4);
  const Tensor2 h0 = random_tensor(rng, 2, 5);
  const Tensor2 last = random_tensor(rng, 2, 4);
  Tensor2 onehot = Tensor2::Zero(2, 2);
  onehot(0, 0) = onehot(1, 1) = 1.0;

  Tensor2 u1(2, 6);
  u1 << last, onehot;
  const Tensor2 h1 = gru_cell(u1, h0, p);
  const Tensor2 pred1 = last + h1 * p.w_out + p.b_out.replicate(2, 1);
  Tensor2 u2(2, 6);
  u2 << pred1, onehot;
  const Tensor2 h2 = gru_cell(u2, h1, p);
  const Tensor2 pred2 = pred1 + h2 * p.w_out + p.b_out.replicate(2, 1);

  const auto preds = decode(h0, last, onehot, 2, p, true);
  CHECK((preds[0] - pred1).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((preds[1] - pred2).cwiseAbs().maxCoeff() < 1e-14);

  CHECK_THROWS_AS(decode(h0, last, Tensor2(), 2, p, true), InvalidInput);
}

TEST_CASE("mse_loss") {
  Rng rng(5);
  const std::vector<Tensor2> a{random_tensor(rng, 2, 3), random_tensor(rng, 2, 3)};
  CHECK(mse_loss(a, a) == 0.0);

  std::vector<Tensor2> shifted = a;
  for (Tensor2& t : shifted) t.array() += 0.25;
  CHECK(mse_loss(shifted, a) == doctest::Approx(0.0625).epsilon(1e-12));

  // 1 x 2 x 3 hand case: squared errors 1,4,0,0.25,1,9 -> 15.25 / 6.
  Tensor2 p1(1, 3), p2(1, 3), t1(1, 3), t2(1, 3);
  p1 << 1, 2, 3;
  t1 << 0, 0, 3;
  p2 << 0.5, -1, 4;
  t2 << 0, 0, 1;
  const std::vector<Tensor2> pred{p1, p2}, tgt{t1, t2};
  CHECK(mse_loss(pred, tgt) == doctest::Approx(15.25 / 6.0).epsilon(1e-15));

  const std::vector<Tensor2> short_seq{t1};
  CHECK_THROWS_AS(mse_loss(pred, short_seq), InvalidInput);
}

TEST_CASE("gradients agree with finite differences across model variants") {
  ModelConfig base = tiny_config();
  SUBCASE("residual, sampling, tied") { CHECK(gradient_check(base, 1) < 1e-4); }
  SUBCASE("untied") {
    base.tied = false;
    CHECK(gradient_check(base, 2) < 1e-4);
  }
  SUBCASE("teacher forcing") {
    base.sample_feedback = false;
    CHECK(gradient_check(base, 3) < 1e-4);
  }
  SUBCASE("no residual") {
    base.residual = false;
    CHECK(gradient_check(base, 4) < 1e-4);
  }
  SUBCASE("supervised one-hot") {
    base.num_actions = 3;
    CHECK(gradient_check(base, 5) < 1e-4);
  }
}

TEST_CASE("truncated feedback gradient drops the feedback path") {
  ModelConfig c = tiny_config();
  Rng rng(6);
  const ModelParams params = ModelParams::init(rng, c);
  const Batch batch = random_batch(rng, c);
  const LossAndGradients full = loss_and_gradients(params, c, batch);
  c.truncate_feedback_gradient = true;
  const LossAndGradients cut = loss_and_gradients(params, c, batch);
  CHECK(full.loss == cut.loss);
  CHECK_FALSE(full.grads.encoder.u_h == cut.grads.encoder.u_h);
}

TEST_CASE("output decoder gradient has outer-product structure") {
  // One decoder step: dL/dW_out = h_1^T (2/N)(pred - target).
  ModelConfig c = tiny_config();
  c.seq_out = 1;
  Rng rng(7);
  const ModelParams params = ModelParams::init(rng, c);
  const Batch batch = random_batch(rng, c);
  const LossAndGradients lg = loss_and_gradients(params, c, batch);

  const Tensor2 h_enc = encode(batch.encoder_inputs, params.encoder);
  const Tensor2 h1 = gru_cell(batch.last_seed_frame(), h_enc, params.encoder);
  const Tensor2 pred = batch.last_seed_frame() + output_decoder(h1, params.encoder);
  const Tensor2 residual = 2.0 / static_cast<double>(pred.size()) * (pred - batch.targets[0]);
  const Tensor2 expected = h1.transpose() * residual;
  CHECK((lg.grads.encoder.w_out - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("zero-residual graph has exactly zero gradients") {
  ModelConfig c = tiny_config();
  Rng rng(8);
  ModelParams params = ModelParams::init(rng, c);
  params.encoder.w_out.setZero();
  params.encoder.b_out.setZero();
  Batch batch = random_batch(rng, c);
  for (Tensor2& t : batch.targets) t = batch.last_seed_frame();
  const LossAndGradients lg = loss_and_gradients(params, c, batch);
  CHECK(lg.loss == 0.0);
  for (const Tensor2* g : lg.grads.tensors()) CHECK(g->cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("teacher forcing and sampling agree on the first predicted frame") {
  ModelConfig c = tiny_config();
  Rng rng(9);
  const ModelParams params = ModelParams::init(rng, c);
  const Batch batch = random_batch(rng, c);
  const auto sampled = loss_and_gradients(params, c, batch).predictions;
  c.sample_feedback = false;
  const auto forced = loss_and_gradients(params, c, batch).predictions;
  CHECK(sampled[0] == forced[0]);
  CHECK_FALSE(sampled[1] == forced[1]);
}

TEST_CASE("tied weights are one parameter set") {
  ModelConfig c = tiny_config();
  Rng rng(10);
  ModelParams tied = ModelParams::init(rng, c);
  CHECK(&tied.decoder() == &tied.encoder);
  CHECK(tied.tensors().size() == GruParams::kTensorCount);

  c.tied = false;
  ModelParams untied = ModelParams::init(rng, c);
  CHECK(&untied.decoder() != &untied.encoder);
  CHECK(untied.tensors().size() == 2 * GruParams::kTensorCount);
}

TEST_CASE("a tied update changes encoder and decoder behaviour identically") {
  synthetic::SinusoidOptions so;
  so.frames = 40;
  so.varying_dims = 6;
  so.width = 15;
  const DatasetSplit split = synthetic::make_sinusoid_split(so);
  const NormalizationStats stats = compute_normalization(split.train);

  ModelConfig c;
  c.hidden = 8;
  c.joint_width = 6;
  c.seq_in = 6;
  c.seq_out = 3;
  c.batch = 4;
  c.iterations = 0;
  TrainedModel model = train(c, split, stats);
  const GruParams before = model.params.encoder;
  model.config.iterations = 1;
  train_in_place(model, split, 123);
  CHECK_FALSE(model.params.encoder.u_z == before.u_z);

  // The decoder sees the updated weights: a fresh decode with the new
  // encoder params equals decoding through decoder().
  const Tensor2 h = Tensor2::Constant(1, 8, 0.1);
  const Tensor2 last = Tensor2::Constant(1, 6, 0.2);
  const auto via_decoder = decode(h, last, Tensor2(), 2, model.params.decoder(), true);
  const auto via_encoder = decode(h, last, Tensor2(), 2, model.params.encoder, true);
  CHECK(via_decoder[1] == via_encoder[1]);
  const auto stale = decode(h, last, Tensor2(), 2, before, true);
  CHECK_FALSE(via_decoder[1] == stale[1]);
}

TEST_CASE("train") {
  synthetic::SinusoidOptions so;
  so.frames = 60;
  so.varying_dims = 9;
  so.width = 18;
  const DatasetSplit split = synthetic::make_sinusoid_split(so);
  const NormalizationStats stats = compute_normalization(split.train);
  ModelConfig c;
  c.hidden = 10;
  c.joint_width = 9;
  c.seq_in = 8;
  c.seq_out = 4;
  c.batch = 4;
  c.seed = 5;

  SUBCASE("zero iterations returns the initial parameters") {
    c.iterations = 0;
    const TrainedModel m = train(c, split, stats);
    CHECK(m.loss_curve.empty());
    Rng rng(c.seed);
    const ModelParams init = ModelParams::init(rng, c);
    CHECK(m.params.encoder.u_h == init.encoder.u_h);
  }
  SUBCASE("deterministic in the seed") {
    c.iterations = 15;
    const TrainedModel a = train(c, split, stats);
    const TrainedModel b = train(c, split, stats);
    CHECK(a.loss_curve.size() == 15);
    CHECK(a.loss_curve == b.loss_curve);
    const auto ta = a.params.tensors();
    const auto tb = b.params.tensors();
    for (std::size_t i = 0; i < ta.size(); ++i) CHECK(*ta[i] == *tb[i]);
    c.seed = 6;
    CHECK_FALSE(train(c, split, stats).loss_curve == a.loss_curve);
  }
  SUBCASE("untied and teacher-forced modes train") {
    c.iterations = 5;
    c.tied = false;
    c.sample_feedback = false;
    const TrainedModel m = train(c, split, stats);
    CHECK(m.loss_curve.size() == 5);
    CHECK_FALSE(m.params.tied());
  }
  SUBCASE("joint width must match the stats") {
    c.joint_width = 10;
    CHECK_THROWS_AS(train(c, split, stats), ConfigError);
  }
  SUBCASE("invalid config") {
    c.lr = 0.0;
    CHECK_THROWS_AS(train(c, split, stats), ConfigError);
  }
}

TEST_CASE("predict") {
  synthetic::SinusoidOptions so;
  so.frames = 60;
  const DatasetSplit split = synthetic::make_sinusoid_split(so);
  const NormalizationStats stats = compute_normalization(split.train);
  ModelConfig c;
  c.hidden = 16;
  c.joint_width = 54;
  c.iterations = 0;
  TrainedModel model = train(c, split, stats);
  const PredictionTask task = make_task(split.test.front(), 0, stats, 50, 10, false);

  SUBCASE("matches decode + denormalize") {
    std::vector<Tensor2> inputs;
    for (Eigen::Index t = 0; t < 50; ++t) inputs.emplace_back(task.seed.row(t));
    const Tensor2 h = encode(inputs, model.params.encoder);
    const auto preds = decode(h, task.last_seed_frame(), Tensor2(), 10, model.params.encoder, true);
    Tensor2 stacked(10, 54);
    for (int t = 0; t < 10; ++t) stacked.row(t) = preds[static_cast<std::size_t>(t)];
    CHECK(predict(model, task) == denormalize(stacked, stats));
  }
  SUBCASE("zeroed residual decoder is the zero-velocity baseline") {
    model.params.encoder.w_out.setZero();
    model.params.encoder.b_out.setZero();
    const Tensor2 pred = predict(model, task);
    const Tensor2 zv = baselines::zero_velocity(denormalize(task.seed, stats), 10);
    for (const Eigen::Index j : stats.used_indices()) CHECK(pred.col(j) == zv.col(j));
  }
  SUBCASE("supervised model rejects a task without one-hot") {
    ModelConfig sc = c;
    sc.num_actions = kNumActions;
    TrainedModel supervised = train(sc, split, stats);
    CHECK_THROWS_AS(predict(supervised, task), ConfigError);
    const PredictionTask with = append_action_onehot(task, 0);
    CHECK(predict(supervised, with).rows() == 10);
    CHECK_THROWS_AS(predict(model, with), ConfigError);
  }
}

TEST_CASE("model checkpoint round trip") {
  namespace fs = std::filesystem;
  synthetic::SinusoidOptions so;
  so.frames = 60;
  so.varying_dims = 9;
  so.width = 18;
  const DatasetSplit split = synthetic::make_sinusoid_split(so);
  const NormalizationStats stats = compute_normalization(split.train);
  ModelConfig c;
  c.hidden = 6;
  c.joint_width = 9;
  c.seq_in = 8;
  c.seq_out = 3;
  c.batch = 2;
  c.iterations = 3;
  c.tied = false;
  const TrainedModel m = train(c, split, stats);

  const fs::path path = fs::temp_directory_path() / "motionseq_test_model.ckpt";
  save_model(path, m);
  const TrainedModel back = load_model(path);
  CHECK(back.config.to_json() == m.config.to_json());
  CHECK(back.loss_curve == m.loss_curve);
  CHECK(back.stats.used == m.stats.used);
  CHECK(back.stats.mean == m.stats.mean);
  const auto a = m.params.tensors();
  const auto b = back.params.tensors();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(*a[i] == *b[i]);

  // A config that disagrees with the stored shapes is rejected.
  TensorContainer raw = TensorContainer::load(path);
  raw.metadata.replace(raw.metadata.find("\"hidden\":6"), 10, "\"hidden\":7");
  raw.save(path);
  CHECK_THROWS_AS(load_model(path), FormatError);
  fs::remove(path);
}
