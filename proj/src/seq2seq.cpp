#include "motionseq/seq2seq.hpp"

#include <cmath>

#include "json.hpp"
#include "motionseq/checkpoint.hpp"
#include "motionseq/errors.hpp"

namespace motionseq {
namespace {

using nlohmann::json;

constexpr const char* kModelFormat = "motionseq-model";

Tensor2 concat_columns(const Tensor2& left, const Tensor2& right) {
  if (right.size() == 0) return left;
  Tensor2 out(left.rows(), left.cols() + right.cols());
  out.leftCols(left.cols()) = left;
  out.rightCols(right.cols()) = right;
  return out;
}

void check_batch(const ModelConfig& config, const Batch& batch) {
  if (batch.encoder_inputs.empty() || batch.targets.empty()) {
    throw InvalidInput("batch needs at least one encoder and one decoder step");
  }
  if (batch.encoder_inputs.front().cols() != config.input_width()) {
    throw ConfigError("batch input width " + std::to_string(batch.encoder_inputs.front().cols()) +
                      " != model input width " + std::to_string(config.input_width()));
  }
  if (batch.joint_width() != config.joint_width) {
    throw ConfigError("batch joint width does not match model");
  }
  if (config.supervised() != (batch.onehot.size() > 0)) {
    throw ConfigError("one-hot conditioning present in batch iff model is supervised");
  }
}

// Activations of the full training graph.
struct Trace {
  std::vector<GruStepCache> encoder;
  std::vector<GruStepCache> decoder;
  std::vector<Tensor2> decoder_hidden;
  std::vector<Tensor2> predictions;
  double loss = 0.0;
};

Trace forward(const ModelParams& params, const ModelConfig& config, const Batch& batch) {
  check_batch(config, batch);
  const GruParams& enc = params.encoder;
  const GruParams& dec = params.decoder();
  const auto steps_out = batch.targets.size();

  Trace tr;
  tr.encoder.resize(batch.encoder_inputs.size());
  tr.decoder.resize(steps_out);
  tr.decoder_hidden.resize(steps_out);
  tr.predictions.resize(steps_out);

  Tensor2 h = Tensor2::Zero(batch.size(), enc.hidden());
  for (std::size_t t = 0; t < batch.encoder_inputs.size(); ++t) {
    h = gru_cell(batch.encoder_inputs[t], h, enc, tr.encoder[t]);
  }

  Tensor2 prev = batch.last_seed_frame();
  for (std::size_t t = 0; t < steps_out; ++t) {
    h = gru_cell(concat_columns(prev, batch.onehot), h, dec, tr.decoder[t]);
    tr.decoder_hidden[t] = h;
    Tensor2 pred = output_decoder(h, dec);
    if (config.residual) pred += prev;
    require_finite(pred, "decoder output");
    tr.predictions[t] = pred;
    prev = config.sample_feedback ? tr.predictions[t] : batch.targets[t];
  }
  tr.loss = mse_loss(tr.predictions, batch.targets);
  return tr;
}

}  // namespace

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (hidden < 1) fail("hidden size must be >= 1");
  if (joint_width < 1) fail("joint width must be >= 1");
  if (num_actions < 0) fail("num_actions must be >= 0");
  if (seq_in < 1 || seq_out < 1) fail("seq_in and seq_out must be >= 1");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("learning rate must be > 0");
  if (batch < 1) fail("batch size must be >= 1");
  if (!(max_grad_norm > 0.0)) fail("max gradient norm must be > 0");
  if (iterations < 0) fail("iterations must be >= 0");
}

std::string ModelConfig::to_json() const {
  json j{{"hidden", hidden},
         {"joint_width", joint_width},
         {"num_actions", num_actions},
         {"residual", residual},
         {"tied", tied},
         {"sample_feedback", sample_feedback},
         {"truncate_feedback_gradient", truncate_feedback_gradient},
         {"seq_in", seq_in},
         {"seq_out", seq_out},
         {"lr", lr},
         {"batch", batch},
         {"max_grad_norm", max_grad_norm},
         {"iterations", iterations},
         {"seed", seed}};
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  ModelConfig c;
  try {
    const json j = json::parse(text);
    j.at("hidden").get_to(c.hidden);
    j.at("joint_width").get_to(c.joint_width);
    j.at("num_actions").get_to(c.num_actions);
    j.at("residual").get_to(c.residual);
    j.at("tied").get_to(c.tied);
    j.at("sample_feedback").get_to(c.sample_feedback);
    j.at("truncate_feedback_gradient").get_to(c.truncate_feedback_gradient);
    j.at("seq_in").get_to(c.seq_in);
    j.at("seq_out").get_to(c.seq_out);
    j.at("lr").get_to(c.lr);
    j.at("batch").get_to(c.batch);
    j.at("max_grad_norm").get_to(c.max_grad_norm);
    j.at("iterations").get_to(c.iterations);
    j.at("seed").get_to(c.seed);
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad model config: ") + e.what());
  }
  c.validate();
  return c;
}

ModelParams ModelParams::init(Rng& rng, const ModelConfig& config) {
  config.validate();
  ModelParams p{init_params(rng, config.input_width(), config.hidden, config.joint_width), {}};
  if (!config.tied) {
    p.untied_decoder = init_params(rng, config.input_width(), config.hidden, config.joint_width);
  }
  return p;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z{GruParams::zeros(encoder.input_width(), encoder.hidden(), encoder.output_width()), {}};
  if (untied_decoder) {
    z.untied_decoder = GruParams::zeros(untied_decoder->input_width(), untied_decoder->hidden(),
                                        untied_decoder->output_width());
  }
  return z;
}

std::vector<Tensor2*> ModelParams::tensors() {
  std::vector<Tensor2*> out;
  for (Tensor2* t : encoder.tensors()) out.push_back(t);
  if (untied_decoder) {
    for (Tensor2* t : untied_decoder->tensors()) out.push_back(t);
  }
  return out;
}

std::vector<const Tensor2*> ModelParams::tensors() const {
  std::vector<const Tensor2*> out;
  for (const Tensor2* t : encoder.tensors()) out.push_back(t);
  if (untied_decoder) {
    for (const Tensor2* t : untied_decoder->tensors()) out.push_back(t);
  }
  return out;
}

Tensor2 Batch::last_seed_frame() const {
  return encoder_inputs.back().leftCols(joint_width());
}

Batch stack_tasks(std::span<const PredictionTask> tasks) {
  if (tasks.empty()) {
    throw InvalidInput("stack_tasks: no tasks");
  }
  const PredictionTask& first = tasks.front();
  const auto n = static_cast<Eigen::Index>(tasks.size());
  for (const PredictionTask& t : tasks) {
    if (t.seed.rows() != first.seed.rows() || t.seed.cols() != first.seed.cols() ||
        t.target.rows() != first.target.rows() || t.target.cols() != first.target.cols() ||
        t.action_onehot.has_value() != first.action_onehot.has_value()) {
      throw InvalidInput("stack_tasks: tasks differ in shape");
    }
  }
  Batch b;
  b.encoder_inputs.assign(static_cast<std::size_t>(first.seed.rows()), Tensor2(n, first.seed.cols()));
  b.targets.assign(static_cast<std::size_t>(first.target.rows()), Tensor2(n, first.target.cols()));
  if (first.action_onehot) b.onehot.resize(n, first.action_onehot->size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const PredictionTask& t = tasks[static_cast<std::size_t>(i)];
    for (Eigen::Index s = 0; s < t.seed.rows(); ++s) b.encoder_inputs[s].row(i) = t.seed.row(s);
    for (Eigen::Index s = 0; s < t.target.rows(); ++s) b.targets[s].row(i) = t.target.row(s);
    if (t.action_onehot) b.onehot.row(i) = *t.action_onehot;
  }
  return b;
}

Tensor2 encode(std::span<const Tensor2> inputs, const GruParams& params) {
  if (inputs.empty()) {
    throw InvalidInput("encode: empty conditioning sequence");
  }
  Tensor2 h = Tensor2::Zero(inputs.front().rows(), params.hidden());
  for (const Tensor2& x : inputs) {
    h = gru_cell(x, h, params);
  }
  return h;
}

std::vector<Tensor2> decode(const Tensor2& h0, const Tensor2& last_frame, const Tensor2& onehot,
                            int steps, const GruParams& params, bool residual) {
  if (last_frame.cols() != params.output_width() ||
      last_frame.cols() + onehot.cols() != params.input_width()) {
    throw InvalidInput("decode: frame width " + std::to_string(last_frame.cols()) + " + one-hot " +
                       std::to_string(onehot.cols()) + " does not match decoder input width " +
                       std::to_string(params.input_width()));
  }
  std::vector<Tensor2> preds;
  preds.reserve(static_cast<std::size_t>(std::max(steps, 0)));
  Tensor2 h = h0;
  Tensor2 prev = last_frame;
  for (int t = 0; t < steps; ++t) {
    h = gru_cell(concat_columns(prev, onehot), h, params);
    Tensor2 pred = output_decoder(h, params);
    if (residual) pred += prev;
    require_finite(pred, "decoder output");
    prev = pred;
    preds.push_back(std::move(pred));
  }
  return preds;
}

double mse_loss(std::span<const Tensor2> predictions, std::span<const Tensor2> targets) {
  if (predictions.size() != targets.size() || predictions.empty()) {
    throw InvalidInput("mse_loss: prediction/target step counts differ or are empty");
  }
  double sum = 0.0;
  Eigen::Index count = 0;
  for (std::size_t t = 0; t < predictions.size(); ++t) {
    if (predictions[t].rows() != targets[t].rows() || predictions[t].cols() != targets[t].cols()) {
      throw InvalidInput("mse_loss: shape mismatch at step " + std::to_string(t));
    }
    sum += (predictions[t] - targets[t]).squaredNorm();
    count += predictions[t].size();
  }
  return sum / static_cast<double>(count);
}

double training_loss(const ModelParams& params, const ModelConfig& config, const Batch& batch) {
  return forward(params, config, batch).loss;
}

LossAndGradients loss_and_gradients(const ModelParams& params, const ModelConfig& config,
                                    const Batch& batch) {
  Trace tr = forward(params, config, batch);

  LossAndGradients out{tr.loss, params.zeros_like(), {}};
  const GruParams& dec = params.decoder();
  GruParams& g_enc = out.grads.encoder;
  GruParams& g_dec = out.grads.decoder();

  const auto steps_out = batch.targets.size();
  const double scale = 2.0 / static_cast<double>(steps_out * batch.targets.front().size());
  const bool feedback_grad = config.sample_feedback && !config.truncate_feedback_gradient;
  const Eigen::Index joints = config.joint_width;

  Tensor2 dh = Tensor2::Zero(batch.size(), dec.hidden());
  Tensor2 dh_prev;
  Tensor2 dx;
  // dL/d(input frame of step t+1), which is prediction t under sampling.
  Tensor2 d_next_input = Tensor2::Zero(batch.size(), joints);

  for (std::size_t k = steps_out; k-- > 0;) {
    Tensor2 d_pred = scale * (tr.predictions[k] - batch.targets[k]);
    if (feedback_grad) d_pred += d_next_input;

    g_dec.w_out.noalias() += tr.decoder_hidden[k].transpose() * d_pred;
    g_dec.b_out += d_pred.colwise().sum();
    dh.noalias() += d_pred * dec.w_out.transpose();

    gru_cell_backward(tr.decoder[k], dh, dec, g_dec, &dx, dh_prev);
    dh.swap(dh_prev);

    d_next_input = dx.leftCols(joints);
    if (config.residual) d_next_input += d_pred;
  }

  for (std::size_t k = batch.encoder_inputs.size(); k-- > 0;) {
    gru_cell_backward(tr.encoder[k], dh, params.encoder, g_enc, nullptr, dh_prev);
    dh.swap(dh_prev);
  }

  for (const Tensor2* g : out.grads.tensors()) {
    require_finite(*g, "backward");
  }
  out.predictions = std::move(tr.predictions);
  return out;
}

void train_in_place(TrainedModel& model, const DatasetSplit& split, std::uint64_t batch_seed,
                    const IterationCallback& on_iteration) {
  const ModelConfig& config = model.config;
  config.validate();
  if (model.stats.used_count() != config.joint_width) {
    throw ConfigError("normalization has " + std::to_string(model.stats.used_count()) +
                      " used dims but the model expects " + std::to_string(config.joint_width));
  }
  TaskOptions options;
  options.seq_in = config.seq_in;
  options.seq_out = config.seq_out;
  options.batch = config.batch;
  options.one_hot = config.supervised();
  if (config.supervised() && config.num_actions != kNumActions) {
    throw ConfigError("supervised models use a " + std::to_string(kNumActions) + "-way one-hot");
  }

  Rng rng(batch_seed);
  std::vector<Tensor2*> params = model.params.tensors();
  for (int it = 0; it < config.iterations; ++it) {
    const auto tasks = make_training_batch(rng, split, model.stats, options);
    LossAndGradients lg = loss_and_gradients(model.params, config, stack_tasks(tasks));
    if (!std::isfinite(lg.loss)) {
      throw NumericError("non-finite training loss at iteration " + std::to_string(it));
    }
    model.loss_curve.push_back(lg.loss);
    std::vector<Tensor2*> grads = lg.grads.tensors();
    clip_gradients(grads, config.max_grad_norm);
    const std::vector<const Tensor2*> const_grads(grads.begin(), grads.end());
    sgd_step(params, const_grads, config.lr);
    if (on_iteration) on_iteration(it, lg.loss);
  }
}

TrainedModel train(const ModelConfig& config, const DatasetSplit& split,
                   const NormalizationStats& stats, const IterationCallback& on_iteration) {
  config.validate();
  Rng rng(config.seed);
  TrainedModel model{config, ModelParams::init(rng, config), stats, {}};
  // Batches come from a stream derived from the same seed.
  train_in_place(model, split, rng(), on_iteration);
  return model;
}

Tensor2 predict_normalized(const TrainedModel& model, const PredictionTask& task, int steps) {
  const ModelConfig& config = model.config;
  if (task.seed.cols() != config.input_width() || task.joint_width() != config.joint_width) {
    throw ConfigError("task width (seed " + std::to_string(task.seed.cols()) + ") does not match model input width " +
                      std::to_string(config.input_width()));
  }
  if (task.action_onehot.has_value() != config.supervised()) {
    throw ConfigError(config.supervised() ? "supervised model requires an action one-hot"
                                          : "model was trained without action one-hot");
  }
  if (task.seed.rows() < 1 || steps < 0) {
    throw InvalidInput("predict: empty seed or negative step count");
  }
  std::vector<Tensor2> inputs;
  inputs.reserve(static_cast<std::size_t>(task.seed.rows()));
  for (Eigen::Index t = 0; t < task.seed.rows(); ++t) inputs.emplace_back(task.seed.row(t));
  const Tensor2 h = encode(inputs, model.params.encoder);
  Tensor2 onehot;
  if (task.action_onehot) onehot = *task.action_onehot;
  const Tensor2 last = task.last_seed_frame();
  const auto preds = decode(h, last, onehot, steps, model.params.decoder(), config.residual);
  Tensor2 out(steps, config.joint_width);
  for (int t = 0; t < steps; ++t) out.row(t) = preds[static_cast<std::size_t>(t)].row(0);
  return out;
}

Tensor2 predict(const TrainedModel& model, const PredictionTask& task, int steps) {
  return denormalize(predict_normalized(model, task, steps), model.stats);
}

Tensor2 predict(const TrainedModel& model, const PredictionTask& task) {
  return predict(model, task, model.config.seq_out);
}

void save_model(const std::filesystem::path& path, const TrainedModel& model) {
  TensorContainer c;
  json meta{{"format", kModelFormat}, {"config", json::parse(model.config.to_json())}};
  c.metadata = meta.dump();
  auto add_set = [&](const std::string& prefix, const GruParams& p) {
    const auto ts = p.tensors();
    for (std::size_t i = 0; i < GruParams::kTensorCount; ++i) {
      c.add(prefix + std::string(GruParams::kNames[i]), *ts[i]);
    }
  };
  if (model.params.tied()) {
    add_set("", model.params.encoder);
  } else {
    add_set("encoder/", model.params.encoder);
    add_set("decoder/", *model.params.untied_decoder);
  }
  const NormalizationStats& s = model.stats;
  Tensor2 used(1, s.width());
  for (Eigen::Index i = 0; i < s.width(); ++i) used(0, i) = s.used[static_cast<std::size_t>(i)] ? 1.0 : 0.0;
  c.add("stats/mean", s.mean);
  c.add("stats/std", s.std);
  c.add("stats/used", used);
  c.add("stats/constant", s.constant_values);
  Tensor2 curve(1, static_cast<Eigen::Index>(model.loss_curve.size()));
  for (std::size_t i = 0; i < model.loss_curve.size(); ++i) curve(0, static_cast<Eigen::Index>(i)) = model.loss_curve[i];
  c.add("loss_curve", curve);
  c.save(path);
}

TrainedModel load_model(const std::filesystem::path& path) {
  const TensorContainer c = TensorContainer::load(path);
  json meta;
  try {
    meta = json::parse(c.metadata);
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
  if (meta.value("format", "") != kModelFormat || !meta.contains("config")) {
    throw FormatError(path.string() + " is not a model checkpoint");
  }
  TrainedModel model;
  model.config = ModelConfig::from_json(meta["config"].dump());
  const ModelConfig& cfg = model.config;

  auto read_set = [&](const std::string& prefix) {
    GruParams p = GruParams::zeros(cfg.input_width(), cfg.hidden, cfg.joint_width);
    auto ts = p.tensors();
    for (std::size_t i = 0; i < GruParams::kTensorCount; ++i) {
      *ts[i] = c.get(prefix + std::string(GruParams::kNames[i]), ts[i]->rows(), ts[i]->cols());
    }
    return p;
  };
  if (cfg.tied) {
    model.params.encoder = read_set("");
  } else {
    model.params.encoder = read_set("encoder/");
    model.params.untied_decoder = read_set("decoder/");
  }

  const Tensor2& mean = c.get("stats/mean");
  if (mean.rows() != 1) throw FormatError("stats/mean must be a row vector");
  const Eigen::Index width = mean.cols();
  NormalizationStats& s = model.stats;
  s.mean = mean;
  s.std = c.get("stats/std", 1, width);
  s.constant_values = c.get("stats/constant", 1, width);
  const Tensor2& used = c.get("stats/used", 1, width);
  s.used.resize(static_cast<std::size_t>(width));
  for (Eigen::Index i = 0; i < width; ++i) s.used[static_cast<std::size_t>(i)] = used(0, i) != 0.0;
  if (s.used_count() != cfg.joint_width) {
    throw FormatError("checkpoint stats have " + std::to_string(s.used_count()) +
                      " used dims but the model expects " + std::to_string(cfg.joint_width));
  }
  if (c.contains("loss_curve")) {
    const Tensor2& curve = c.get("loss_curve");
    model.loss_curve.assign(curve.data(), curve.data() + curve.size());
  }
  return model;
}

}  // namespace motionseq
