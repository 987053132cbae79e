#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionseq/gru.hpp"
#include "motionseq/tensor.hpp"

namespace motionseq {

// The fifteen action classes, in one-hot index order.
inline constexpr std::array<std::string_view, 15> kActions = {
    "walking",  "eating",    "smoking",  "discussion",  "directions",
    "greeting", "phoning",   "posing",   "purchases",   "sitting",
    "sittingdown", "takingphoto", "waiting", "walkingdog", "walkingtogether"};
inline constexpr int kNumActions = static_cast<int>(kActions.size());

// Index of `action` in kActions; throws InvalidInput if unknown.
int action_index(std::string_view action);

// Raw capture rate is 50 fps; the standard pipeline keeps every second frame.
inline constexpr double kRawFrameInterval = 0.02;
inline constexpr int kDefaultDownsample = 2;

struct SequenceMeta {
  std::string action;
  int subject = 0;
  int trial = 0;
};

struct PoseSequence {
  Tensor2 frames;  // N x D
  double frame_interval = kRawFrameInterval;
  std::string action;
  int subject = 0;
  int trial = 0;

  Eigen::Index length() const { return frames.rows(); }
  Eigen::Index width() const { return frames.cols(); }
};

// One frame per line, comma-separated decimals, constant width.
PoseSequence load_sequence(std::istream& in, const SequenceMeta& meta,
                           double frame_interval = kRawFrameInterval);
PoseSequence load_sequence_file(const std::filesystem::path& path, const SequenceMeta& meta,
                                double frame_interval = kRawFrameInterval);

// Shortest round-trip decimal form, so a reload is bit-exact.
void write_sequence(std::ostream& out, const Tensor2& frames);
void write_sequence_file(const std::filesystem::path& path, const Tensor2& frames);

// Keeps frames 0, factor, 2*factor, ...
PoseSequence downsample(const PoseSequence& seq, int factor);

inline constexpr double kConstantDimEpsilon = 1e-4;

struct NormalizationStats {
  RowVector mean;
  RowVector std;
  std::vector<bool> used;     // true for dims whose std >= eps
  RowVector constant_values;  // mean of each unused dim (0 where used)

  Eigen::Index width() const { return mean.size(); }
  Eigen::Index used_count() const;
  std::vector<Eigen::Index> used_indices() const;
};

NormalizationStats compute_normalization(std::span<const PoseSequence> train,
                                         double eps = kConstantDimEpsilon);

// (x - mean) / std on used dims; unused dims dropped. [N x D] -> [N x D_used]
Tensor2 normalize(const Tensor2& frames, const NormalizationStats& stats);
// Inverse of normalize; unused dims reinstated from constant_values.
Tensor2 denormalize(const Tensor2& frames, const NormalizationStats& stats);

struct PredictionTask {
  Tensor2 seed;    // T_in x D_in, normalized; one-hot columns appended when present
  Tensor2 target;  // T_out x D_used, normalized
  std::optional<RowVector> action_onehot;

  std::string action;
  int subject = 0;
  int trial = 0;
  Eigen::Index offset = 0;

  Eigen::Index joint_width() const { return target.cols(); }
  // The joint-angle part of the final conditioning frame.
  RowVector last_seed_frame() const { return seed.row(seed.rows() - 1).head(joint_width()); }
  std::string describe() const;
};

// Every seed row gains the one-hot block; target is unchanged.
PredictionTask append_action_onehot(PredictionTask task, int action_index,
                                    int num_actions = kNumActions);

struct DatasetSplit {
  std::vector<PoseSequence> train;
  std::vector<PoseSequence> test;
  int test_subject = 5;
};

struct SplitOptions {
  int test_subject = 5;
  int downsample_factor = kDefaultDownsample;
  double raw_frame_interval = kRawFrameInterval;
};

// Reads <root>/S<subject>/<action>_<trial>.txt for each requested action.
// Sequences of test_subject go to test, every other subject to train.
DatasetSplit load_split(const std::filesystem::path& root, std::span<const std::string> actions,
                        const SplitOptions& options = {});

struct TaskOptions {
  int seq_in = 50;
  int seq_out = 10;
  int batch = 16;
  int clips_per_action = 8;
  bool one_hot = false;
};

// Uniform draw of a training sequence then a uniform start offset.
std::vector<PredictionTask> make_training_batch(Rng& rng, const DatasetSplit& split,
                                                const NormalizationStats& stats,
                                                const TaskOptions& options);

struct ActionClips {
  std::string action;
  std::vector<PredictionTask> tasks;
};

struct TestClips {
  std::vector<ActionClips> by_action;
  std::uint64_t seed = 0;

  std::size_t task_count() const;
};

// clips_per_action reproducible picks per requested action from split.test.
TestClips select_test_clips(std::uint64_t seed, const DatasetSplit& split,
                            const NormalizationStats& stats, std::span<const std::string> actions,
                            const TaskOptions& options);

// Slice one task from a sequence at a given offset.
PredictionTask make_task(const PoseSequence& seq, Eigen::Index offset,
                         const NormalizationStats& stats, int seq_in, int seq_out, bool one_hot);

}  // namespace motionseq
