#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "motionseq/dataio.hpp"
#include "motionseq/tensor.hpp"

namespace motionseq {

enum class MetricSpace { kEuler, kExpMap };

std::string_view to_string(MetricSpace space);
MetricSpace parse_metric_space(std::string_view text);

// Leading dims holding global translation and rotation; never scored.
inline constexpr Eigen::Index kGlobalDims = 6;

inline const std::vector<int> kShortTermHorizonsMs = {80, 160, 320, 400};

// 1-based predicted-frame index of a horizon: 80 ms at 25 fps is frame 2.
int horizon_frame(int horizon_ms, double frame_interval);

// Per-horizon L2 distance between the angle vectors of pred and gt at each
// horizon frame (1-based). Frames are full-width expmap poses; every 3-dim
// block is converted to Euler angles when space is kEuler, and the first
// kGlobalDims dims are excluded.
std::vector<double> mean_angle_error(const Tensor2& pred, const Tensor2& gt,
                                     std::span<const int> horizon_frames,
                                     MetricSpace space = MetricSpace::kEuler);

// Maps a full-width expmap frame to the representation compared by the
// metric (Euler or unchanged).
RowVector angle_representation(const RowVector& frame, MetricSpace space);

struct EvalEntry {
  std::string action;
  std::string method;
  int horizon_ms = 0;
  double error = 0.0;
  int clip_count = 0;

  bool operator==(const EvalEntry&) const = default;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
  MetricSpace space = MetricSpace::kEuler;
  std::uint64_t clip_seed = 0;

  // Appends entries of another report evaluated on the same clips.
  void merge(const EvalReport& other);
  const EvalEntry* find(std::string_view action, std::string_view method, int horizon_ms) const;
};

struct EvalOptions {
  std::vector<int> horizons_ms = kShortTermHorizonsMs;
  double frame_interval = 0.04;
  MetricSpace space = MetricSpace::kEuler;
};

// Returns a denormalized full-width prediction with at least as many frames
// as the largest horizon.
using Predictor = std::function<Tensor2(const PredictionTask&)>;

// Runs `predictor` on every clip and averages per-horizon errors per action.
// Ground truth is the denormalized task target.
EvalReport evaluate(std::string_view method, const Predictor& predictor, const TestClips& clips,
                    const NormalizationStats& stats, const EvalOptions& options = {});

// CSV: header "action,method,horizon_ms,error", errors at full precision.
std::string render_csv(const EvalReport& report);
// Markdown: one table per group of up to four actions, methods as rows,
// action/horizon columns, two decimals.
std::string render_markdown(const EvalReport& report);
// Inverse of render_csv (clip counts are not part of the CSV).
EvalReport parse_csv(std::string_view text);

}  // namespace motionseq
