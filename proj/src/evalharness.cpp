#include "motionseq/evalharness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "motionseq/errors.hpp"
#include "motionseq/rotmath.hpp"

namespace motionseq {
namespace {

std::string full_precision(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

std::string two_decimals(double v) {
  std::array<char, 64> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

template <typename T>
std::vector<T> unique_in_order(const std::vector<EvalEntry>& entries, T EvalEntry::*field) {
  std::vector<T> out;
  for (const EvalEntry& e : entries) {
    if (std::find(out.begin(), out.end(), e.*field) == out.end()) out.push_back(e.*field);
  }
  return out;
}

}  // namespace

std::string_view to_string(MetricSpace space) {
  return space == MetricSpace::kEuler ? "euler" : "expmap";
}

MetricSpace parse_metric_space(std::string_view text) {
  if (text == "euler") return MetricSpace::kEuler;
  if (text == "expmap") return MetricSpace::kExpMap;
  throw InvalidInput("unknown metric space '" + std::string(text) + "' (expected euler or expmap)");
}

int horizon_frame(int horizon_ms, double frame_interval) {
  if (horizon_ms <= 0 || !(frame_interval > 0.0)) {
    throw InvalidInput("horizon and frame interval must be positive");
  }
  const double frames = horizon_ms / (frame_interval * 1000.0);
  const int rounded = static_cast<int>(std::lround(frames));
  if (rounded < 1 || std::abs(frames - rounded) > 1e-6) {
    throw InvalidInput("horizon " + std::to_string(horizon_ms) +
                       " ms does not fall on a frame at this frame rate");
  }
  return rounded;
}

RowVector angle_representation(const RowVector& frame, MetricSpace space) {
  if (space == MetricSpace::kExpMap) return frame;
  if (frame.size() % 3 != 0) {
    throw InvalidInput("frame width " + std::to_string(frame.size()) + " is not a multiple of 3");
  }
  RowVector out = frame;
  // Block 0 is global translation, not a rotation.
  for (Eigen::Index j = 3; j < frame.size(); j += 3) {
    const rotmath::ExpMap r(frame(j), frame(j + 1), frame(j + 2));
    const rotmath::EulerAngles e = rotmath::rotmat_to_euler(rotmath::expmap_to_rotmat(r));
    out(j) = e.yaw;
    out(j + 1) = e.pitch;
    out(j + 2) = e.roll;
  }
  return out;
}

std::vector<double> mean_angle_error(const Tensor2& pred, const Tensor2& gt,
                                     std::span<const int> horizon_frames, MetricSpace space) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols()) {
    throw InvalidInput("mean_angle_error: prediction and ground truth shapes differ");
  }
  if (pred.cols() <= kGlobalDims) {
    throw InvalidInput("mean_angle_error: frames too narrow");
  }
  std::vector<double> errors;
  errors.reserve(horizon_frames.size());
  for (const int frame : horizon_frames) {
    if (frame < 1 || frame > pred.rows()) {
      throw InvalidInput("horizon frame " + std::to_string(frame) + " outside prediction of " +
                         std::to_string(pred.rows()) + " frames");
    }
    const RowVector a = angle_representation(pred.row(frame - 1), space);
    const RowVector b = angle_representation(gt.row(frame - 1), space);
    const Eigen::Index n = a.size() - kGlobalDims;
    errors.push_back((a.tail(n) - b.tail(n)).norm());
  }
  return errors;
}

void EvalReport::merge(const EvalReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

const EvalEntry* EvalReport::find(std::string_view action, std::string_view method,
                                  int horizon_ms) const {
  for (const EvalEntry& e : entries) {
    if (e.action == action && e.method == method && e.horizon_ms == horizon_ms) return &e;
  }
  return nullptr;
}

EvalReport evaluate(std::string_view method, const Predictor& predictor, const TestClips& clips,
                    const NormalizationStats& stats, const EvalOptions& options) {
  std::vector<int> frames;
  for (const int ms : options.horizons_ms) frames.push_back(horizon_frame(ms, options.frame_interval));

  EvalReport report;
  report.space = options.space;
  report.clip_seed = clips.seed;
  for (const ActionClips& group : clips.by_action) {
    if (group.tasks.empty()) continue;
    std::vector<double> sums(frames.size(), 0.0);
    for (const PredictionTask& task : group.tasks) {
      std::vector<double> errs;
      try {
        const Tensor2 gt = denormalize(task.target, stats);
        Tensor2 pred = predictor(task);
        if (pred.rows() > gt.rows()) pred.conservativeResize(gt.rows(), Eigen::NoChange);
        errs = mean_angle_error(pred, gt, frames, options.space);
      } catch (const std::exception& e) {
        throw Error(std::string(method) + " failed on clip " + task.describe() + ": " + e.what());
      }
      for (std::size_t i = 0; i < frames.size(); ++i) sums[i] += errs[i];
    }
    const auto n = static_cast<double>(group.tasks.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
      report.entries.push_back({group.action, std::string(method), options.horizons_ms[i],
                                sums[i] / n, static_cast<int>(group.tasks.size())});
    }
  }
  return report;
}

std::string render_csv(const EvalReport& report) {
  std::ostringstream out;
  out << "action,method,horizon_ms,error\n";
  for (const EvalEntry& e : report.entries) {
    out << e.action << ',' << e.method << ',' << e.horizon_ms << ',' << full_precision(e.error)
        << '\n';
  }
  return out.str();
}

std::string render_markdown(const EvalReport& report) {
  std::ostringstream out;
  out << "Mean angle error (metric: " << to_string(report.space)
      << ", clip seed: " << report.clip_seed << ")\n";
  const auto actions = unique_in_order(report.entries, &EvalEntry::action);
  const auto methods = unique_in_order(report.entries, &EvalEntry::method);
  const auto horizons = unique_in_order(report.entries, &EvalEntry::horizon_ms);

  constexpr std::size_t kActionsPerTable = 4;
  for (std::size_t start = 0; start < actions.size(); start += kActionsPerTable) {
    const std::size_t stop = std::min(actions.size(), start + kActionsPerTable);
    out << "\n| Method |";
    for (std::size_t a = start; a < stop; ++a) {
      for (const int h : horizons) out << ' ' << actions[a] << ' ' << h << " |";
    }
    out << "\n|---|";
    for (std::size_t a = start; a < stop; ++a) {
      for (std::size_t h = 0; h < horizons.size(); ++h) out << "---:|";
    }
    out << '\n';
    for (const std::string& m : methods) {
      out << "| " << m << " |";
      for (std::size_t a = start; a < stop; ++a) {
        for (const int h : horizons) {
          const EvalEntry* e = report.find(actions[a], m, h);
          out << ' ' << (e ? two_decimals(e->error) : std::string("-")) << " |";
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

EvalReport parse_csv(std::string_view text) {
  EvalReport report;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "action,method,horizon_ms,error") {
    throw FormatError("report CSV: unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (fields.size() != 4) {
      throw FormatError("report CSV line " + std::to_string(line_no) + ": expected 4 fields");
    }
    EvalEntry e;
    e.action = fields[0];
    e.method = fields[1];
    const auto r1 = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), e.horizon_ms);
    const auto r2 = std::from_chars(fields[3].data(), fields[3].data() + fields[3].size(), e.error);
    if (r1.ec != std::errc() || r2.ec != std::errc()) {
      throw FormatError("report CSV line " + std::to_string(line_no) + ": bad number");
    }
    report.entries.push_back(std::move(e));
  }
  return report;
}

}  // namespace motionseq
