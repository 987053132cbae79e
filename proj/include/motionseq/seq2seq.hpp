#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "motionseq/dataio.hpp"
#include "motionseq/gru.hpp"
#include "motionseq/tensor.hpp"

namespace motionseq {

struct ModelConfig {
  int hidden = 1024;
  int joint_width = 54;
  int num_actions = 0;  // kNumActions for the supervised multi-action model
  bool residual = true;
  bool tied = true;
  bool sample_feedback = true;
  // Stop gradients at the fed-back predictions (ablation only).
  bool truncate_feedback_gradient = false;
  int seq_in = 50;
  int seq_out = 10;
  double lr = 0.05;
  int batch = 16;
  double max_grad_norm = 5.0;
  int iterations = 10000;
  std::uint64_t seed = 1;

  int input_width() const { return joint_width + num_actions; }
  bool supervised() const { return num_actions > 0; }

  // Throws ConfigError on out-of-range values.
  void validate() const;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);
};

// Encoder and decoder weights. With tied weights there is a single set and
// decoder() refers to the encoder object itself.
struct ModelParams {
  GruParams encoder;
  std::optional<GruParams> untied_decoder;

  bool tied() const { return !untied_decoder.has_value(); }
  GruParams& decoder() { return untied_decoder ? *untied_decoder : encoder; }
  const GruParams& decoder() const { return untied_decoder ? *untied_decoder : encoder; }

  static ModelParams init(Rng& rng, const ModelConfig& config);
  ModelParams zeros_like() const;

  std::vector<Tensor2*> tensors();
  std::vector<const Tensor2*> tensors() const;
};

// Time-major batch: one [B x width] matrix per step.
struct Batch {
  std::vector<Tensor2> encoder_inputs;  // T_in x [B x D_in]
  std::vector<Tensor2> targets;         // T_out x [B x D_joint]
  Tensor2 onehot;                       // [B x A], empty when unsupervised

  Eigen::Index size() const { return encoder_inputs.empty() ? 0 : encoder_inputs.front().rows(); }
  Eigen::Index joint_width() const { return targets.empty() ? 0 : targets.front().cols(); }
  // Joint part of the final conditioning frame, [B x D_joint].
  Tensor2 last_seed_frame() const;
};

Batch stack_tasks(std::span<const PredictionTask> tasks);

// h_0 = 0; h_t = gru_cell(x_t, h_{t-1}); returns h_{T_in}.
Tensor2 encode(std::span<const Tensor2> inputs, const GruParams& params);

// Runs the decoder for `steps` steps starting from last_frame, feeding each
// prediction back as the next input. With `residual`, each step predicts a
// delta added to its input frame.
std::vector<Tensor2> decode(const Tensor2& h, const Tensor2& last_frame, const Tensor2& onehot,
                            int steps, const GruParams& params, bool residual);

// Mean squared error over batch, time and joint dims.
double mse_loss(std::span<const Tensor2> predictions, std::span<const Tensor2> targets);

struct LossAndGradients {
  double loss = 0.0;
  ModelParams grads;
  std::vector<Tensor2> predictions;
};

// One forward pass of the training graph (sampling feedback or teacher
// forcing per config) and its exact gradients by backpropagation through
// time.
LossAndGradients loss_and_gradients(const ModelParams& params, const ModelConfig& config,
                                     const Batch& batch);

// Forward-only training loss; same graph as loss_and_gradients.
double training_loss(const ModelParams& params, const ModelConfig& config, const Batch& batch);

struct TrainedModel {
  ModelConfig config;
  ModelParams params;
  NormalizationStats stats;
  std::vector<double> loss_curve;
};

using IterationCallback = std::function<void(int iteration, double loss)>;

// Initializes parameters from config.seed and trains.
TrainedModel train(const ModelConfig& config, const DatasetSplit& split,
                   const NormalizationStats& stats, const IterationCallback& on_iteration = {});

// Continues training an existing model for model.config.iterations steps,
// drawing batches from an rng seeded with `batch_seed`.
void train_in_place(TrainedModel& model, const DatasetSplit& split, std::uint64_t batch_seed,
                    const IterationCallback& on_iteration = {});

// Normalized prediction [steps x D_joint] for a single task.
Tensor2 predict_normalized(const TrainedModel& model, const PredictionTask& task, int steps);
// Denormalized full-width prediction [seq_out x D].
Tensor2 predict(const TrainedModel& model, const PredictionTask& task);
Tensor2 predict(const TrainedModel& model, const PredictionTask& task, int steps);

void save_model(const std::filesystem::path& path, const TrainedModel& model);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace motionseq
