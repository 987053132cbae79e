#include "motionseq/synthetic.hpp"

#include <cmath>
#include <numbers>

#include "motionseq/errors.hpp"

namespace motionseq::synthetic {
namespace {

constexpr Eigen::Index kFirstVarying = 6;

}  // namespace

DatasetSplit make_sinusoid_split(const SinusoidOptions& o) {
  if (o.frames < 1 || o.width < kFirstVarying + o.varying_dims || o.varying_dims < 1 ||
      !(o.frame_interval > 0.0)) {
    throw InvalidInput("synthetic: inconsistent options");
  }
  Rng rng(o.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  // Per-dim mixing weights and phases shared by all sequences.
  const auto dims = static_cast<Eigen::Index>(o.varying_dims);
  Tensor2 weight(dims, 3);
  Tensor2 phase(dims, 3);
  for (Eigen::Index d = 0; d < dims; ++d) {
    for (int k = 0; k < 3; ++k) {
      weight(d, k) = o.amplitude * (0.5 + unit(rng)) / 3.0;
      phase(d, k) = 2.0 * std::numbers::pi * unit(rng);
    }
  }
  // Constant dims: zeros except a few fixed nonzero offsets.
  RowVector constants = RowVector::Zero(o.width);
  for (Eigen::Index j = kFirstVarying + dims; j < o.width; j += 7) constants(j) = 0.1 * unit(rng);

  auto make_sequence = [&](const std::string& action, int subject, int trial) {
    PoseSequence seq;
    seq.action = action;
    seq.subject = subject;
    seq.trial = trial;
    seq.frame_interval = o.frame_interval;
    seq.frames.resize(o.frames, o.width);
    const double shift = 1000.0 * unit(rng);
    for (Eigen::Index n = 0; n < o.frames; ++n) {
      seq.frames.row(n) = constants;
      const double t = shift + static_cast<double>(n) * o.frame_interval;
      for (Eigen::Index d = 0; d < dims; ++d) {
        double v = 0.0;
        for (int k = 0; k < 3; ++k) {
          v += weight(d, k) * std::sin(2.0 * std::numbers::pi * o.frequencies_hz[static_cast<std::size_t>(k)] * t +
                                       phase(d, k));
        }
        seq.frames(n, kFirstVarying + d) = v;
      }
    }
    return seq;
  };

  DatasetSplit split;
  split.test_subject = o.test_subject;
  for (const std::string& action : o.actions) {
    for (const int subject : o.train_subjects) {
      for (int trial = 1; trial <= o.trials; ++trial) {
        split.train.push_back(make_sequence(action, subject, trial));
      }
    }
    for (int trial = 1; trial <= o.trials; ++trial) {
      split.test.push_back(make_sequence(action, o.test_subject, trial));
    }
  }
  return split;
}

void write_dataset(const std::filesystem::path& root, const DatasetSplit& split) {
  namespace fs = std::filesystem;
  auto write_all = [&](const std::vector<PoseSequence>& seqs) {
    for (const PoseSequence& s : seqs) {
      const fs::path dir = root / ("S" + std::to_string(s.subject));
      fs::create_directories(dir);
      write_sequence_file(dir / (s.action + "_" + std::to_string(s.trial) + ".txt"), s.frames);
    }
  };
  write_all(split.train);
  write_all(split.test);
}

}  // namespace motionseq::synthetic
