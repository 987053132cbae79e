#include "motionseq/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "motionseq/errors.hpp"

namespace motionseq {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

void parse_line(std::string_view line, std::size_t line_no, std::vector<double>& out) {
  out.clear();
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    const std::string_view token =
        trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
    double value = 0.0;
    const char* begin = token.data();
    const char* end = token.data() + token.size();
    // from_chars rejects a leading '+'.
    if (!token.empty() && *begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (token.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
      throw FormatError("line " + std::to_string(line_no) + ": invalid number '" +
                        std::string(token) + "'");
    }
    out.push_back(value);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
}

}  // namespace

int action_index(std::string_view action) {
  const auto it = std::find(kActions.begin(), kActions.end(), action);
  if (it == kActions.end()) {
    throw InvalidInput("unknown action '" + std::string(action) + "'");
  }
  return static_cast<int>(it - kActions.begin());
}

PoseSequence load_sequence(std::istream& in, const SequenceMeta& meta, double frame_interval) {
  if (!(frame_interval > 0.0)) {
    throw InvalidInput("frame interval must be positive");
  }
  std::vector<double> values;
  std::vector<double> row;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view content = trim(line);
    if (content.empty()) continue;
    parse_line(content, line_no, row);
    if (width == 0) {
      width = row.size();
    } else if (row.size() != width) {
      throw FormatError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                        " values, found " + std::to_string(row.size()));
    }
    values.insert(values.end(), row.begin(), row.end());
  }
  if (width == 0) {
    throw FormatError("empty sequence file");
  }
  PoseSequence seq;
  const auto n = static_cast<Eigen::Index>(values.size() / width);
  seq.frames = Eigen::Map<const Tensor2>(values.data(), n, static_cast<Eigen::Index>(width));
  seq.frame_interval = frame_interval;
  seq.action = meta.action;
  seq.subject = meta.subject;
  seq.trial = meta.trial;
  return seq;
}

PoseSequence load_sequence_file(const std::filesystem::path& path, const SequenceMeta& meta,
                                double frame_interval) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open " + path.string());
  }
  try {
    return load_sequence(in, meta, frame_interval);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_sequence(std::ostream& out, const Tensor2& frames) {
  std::array<char, 32> buf{};
  for (Eigen::Index i = 0; i < frames.rows(); ++i) {
    for (Eigen::Index j = 0; j < frames.cols(); ++j) {
      if (j > 0) out.put(',');
      const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), frames(i, j));
      out.write(buf.data(), ptr - buf.data());
    }
    out.put('\n');
  }
}

void write_sequence_file(const std::filesystem::path& path, const Tensor2& frames) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_sequence(out, frames);
}

PoseSequence downsample(const PoseSequence& seq, int factor) {
  if (factor <= 0) {
    throw InvalidInput("downsample factor must be positive");
  }
  PoseSequence out = seq;
  const Eigen::Index n = (seq.length() + factor - 1) / factor;
  out.frames.resize(n, seq.width());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.frames.row(i) = seq.frames.row(i * factor);
  }
  out.frame_interval = seq.frame_interval * factor;
  return out;
}

Eigen::Index NormalizationStats::used_count() const {
  return std::count(used.begin(), used.end(), true);
}

std::vector<Eigen::Index> NormalizationStats::used_indices() const {
  std::vector<Eigen::Index> idx;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (used[i]) idx.push_back(static_cast<Eigen::Index>(i));
  }
  return idx;
}

NormalizationStats compute_normalization(std::span<const PoseSequence> train, double eps) {
  if (train.empty()) {
    throw InvalidInput("compute_normalization: empty training set");
  }
  const Eigen::Index width = train.front().width();
  Eigen::Index count = 0;
  RowVector sum = RowVector::Zero(width);
  for (const PoseSequence& s : train) {
    if (s.width() != width) {
      throw InvalidInput("compute_normalization: sequences differ in width");
    }
    sum += s.frames.colwise().sum();
    count += s.length();
  }
  if (count == 0) {
    throw InvalidInput("compute_normalization: no frames");
  }
  NormalizationStats stats;
  stats.mean = sum / static_cast<double>(count);
  RowVector sq = RowVector::Zero(width);
  for (const PoseSequence& s : train) {
    sq += (s.frames.rowwise() - stats.mean).array().square().matrix().colwise().sum();
  }
  stats.std = (sq / static_cast<double>(count)).cwiseSqrt();
  stats.used.resize(static_cast<std::size_t>(width));
  stats.constant_values = RowVector::Zero(width);
  for (Eigen::Index i = 0; i < width; ++i) {
    const bool used = stats.std(i) >= eps;
    stats.used[static_cast<std::size_t>(i)] = used;
    if (!used) stats.constant_values(i) = stats.mean(i);
  }
  return stats;
}

Tensor2 normalize(const Tensor2& frames, const NormalizationStats& stats) {
  if (frames.cols() != stats.width()) {
    throw InvalidInput("normalize: width " + std::to_string(frames.cols()) + " != stats width " +
                       std::to_string(stats.width()));
  }
  const auto idx = stats.used_indices();
  Tensor2 out(frames.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::Index j = idx[k];
    out.col(static_cast<Eigen::Index>(k)) =
        (frames.col(j).array() - stats.mean(j)) / stats.std(j);
  }
  return out;
}

Tensor2 denormalize(const Tensor2& frames, const NormalizationStats& stats) {
  const auto idx = stats.used_indices();
  if (frames.cols() != static_cast<Eigen::Index>(idx.size())) {
    throw InvalidInput("denormalize: width " + std::to_string(frames.cols()) +
                       " != used dims " + std::to_string(idx.size()));
  }
  Tensor2 out(frames.rows(), stats.width());
  out.rowwise() = stats.constant_values;
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const Eigen::Index j = idx[k];
    out.col(j) = frames.col(static_cast<Eigen::Index>(k)).array() * stats.std(j) + stats.mean(j);
  }
  return out;
}

std::string PredictionTask::describe() const {
  std::ostringstream s;
  s << action << " S" << subject << " trial " << trial << " offset " << offset;
  return s.str();
}

PredictionTask append_action_onehot(PredictionTask task, int action_index, int num_actions) {
  if (num_actions <= 0 || action_index < 0 || action_index >= num_actions) {
    throw InvalidInput("action index " + std::to_string(action_index) + " outside [0, " +
                       std::to_string(num_actions) + ")");
  }
  if (task.action_onehot) {
    throw InvalidInput("task already carries a one-hot block");
  }
  RowVector onehot = RowVector::Zero(num_actions);
  onehot(action_index) = 1.0;
  Tensor2 seed(task.seed.rows(), task.seed.cols() + num_actions);
  seed.leftCols(task.seed.cols()) = task.seed;
  seed.rightCols(num_actions).rowwise() = onehot;
  task.seed = std::move(seed);
  task.action_onehot = std::move(onehot);
  return task;
}

PredictionTask make_task(const PoseSequence& seq, Eigen::Index offset,
                         const NormalizationStats& stats, int seq_in, int seq_out, bool one_hot) {
  if (seq_in < 1 || seq_out < 0) {
    throw InvalidInput("make_task: seq_in must be >= 1 and seq_out >= 0");
  }
  if (offset < 0 || offset + seq_in + seq_out > seq.length()) {
    throw InvalidInput("make_task: window exceeds sequence length");
  }
  PredictionTask task;
  task.seed = normalize(seq.frames.middleRows(offset, seq_in), stats);
  task.target = normalize(seq.frames.middleRows(offset + seq_in, seq_out), stats);
  task.action = seq.action;
  task.subject = seq.subject;
  task.trial = seq.trial;
  task.offset = offset;
  if (one_hot) {
    task = append_action_onehot(std::move(task), action_index(seq.action));
  }
  return task;
}

DatasetSplit load_split(const std::filesystem::path& root, std::span<const std::string> actions,
                        const SplitOptions& options) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) {
    throw Error("data root " + root.string() + " is not a directory");
  }
  std::vector<int> subjects;
  for (const auto& entry : fs::directory_iterator(root)) {
    const std::string name = entry.path().filename().string();
    if (!entry.is_directory() || name.size() < 2 || name[0] != 'S') continue;
    int id = 0;
    const auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), id);
    if (ec == std::errc() && ptr == name.data() + name.size()) subjects.push_back(id);
  }
  std::sort(subjects.begin(), subjects.end());

  DatasetSplit split;
  split.test_subject = options.test_subject;
  for (const int subject : subjects) {
    const fs::path dir = root / ("S" + std::to_string(subject));
    for (const std::string& action : actions) {
      action_index(action);
      for (int trial = 1;; ++trial) {
        const fs::path file = dir / (action + "_" + std::to_string(trial) + ".txt");
        if (!fs::exists(file)) break;
        PoseSequence seq = load_sequence_file(file, {action, subject, trial}, options.raw_frame_interval);
        seq = downsample(seq, options.downsample_factor);
        (subject == options.test_subject ? split.test : split.train).push_back(std::move(seq));
      }
    }
  }
  if (split.train.empty()) {
    throw ConfigError("no training sequences found under " + root.string());
  }
  return split;
}

std::vector<PredictionTask> make_training_batch(Rng& rng, const DatasetSplit& split,
                                                const NormalizationStats& stats,
                                                const TaskOptions& options) {
  const Eigen::Index window = options.seq_in + options.seq_out;
  std::vector<const PoseSequence*> eligible;
  for (const PoseSequence& s : split.train) {
    if (s.length() >= window) eligible.push_back(&s);
  }
  if (eligible.empty()) {
    throw ConfigError("no training sequence has the " + std::to_string(window) +
                      " frames needed for one window");
  }
  if (options.batch < 1) {
    throw ConfigError("batch size must be positive");
  }
  std::vector<PredictionTask> batch;
  batch.reserve(static_cast<std::size_t>(options.batch));
  for (int b = 0; b < options.batch; ++b) {
    std::uniform_int_distribution<std::size_t> pick_seq(0, eligible.size() - 1);
    const PoseSequence& seq = *eligible[pick_seq(rng)];
    std::uniform_int_distribution<Eigen::Index> pick_offset(0, seq.length() - window);
    batch.push_back(make_task(seq, pick_offset(rng), stats, options.seq_in, options.seq_out,
                              options.one_hot));
  }
  return batch;
}

std::size_t TestClips::task_count() const {
  std::size_t n = 0;
  for (const auto& a : by_action) n += a.tasks.size();
  return n;
}

TestClips select_test_clips(std::uint64_t seed, const DatasetSplit& split,
                            const NormalizationStats& stats, std::span<const std::string> actions,
                            const TaskOptions& options) {
  const Eigen::Index window = options.seq_in + options.seq_out;
  TestClips clips;
  clips.seed = seed;
  Rng rng(seed);
  for (const std::string& action : actions) {
    std::vector<const PoseSequence*> eligible;
    for (const PoseSequence& s : split.test) {
      if (s.action == action && s.length() >= window) eligible.push_back(&s);
    }
    if (eligible.empty()) {
      throw ConfigError("no test sequence of action '" + action + "' with " +
                        std::to_string(window) + " frames");
    }
    ActionClips group{action, {}};
    for (int i = 0; i < options.clips_per_action; ++i) {
      std::uniform_int_distribution<std::size_t> pick_seq(0, eligible.size() - 1);
      const PoseSequence& seq = *eligible[pick_seq(rng)];
      std::uniform_int_distribution<Eigen::Index> pick_offset(0, seq.length() - window);
      group.tasks.push_back(make_task(seq, pick_offset(rng), stats, options.seq_in,
                                      options.seq_out, options.one_hot));
    }
    clips.by_action.push_back(std::move(group));
  }
  return clips;
}

}  // namespace motionseq
