#include "motionseq/baselines.hpp"

#include <string>

#include "motionseq/errors.hpp"

namespace motionseq::baselines {

Tensor2 zero_velocity(const Tensor2& seed, int steps) {
  if (seed.rows() < 1) {
    throw InvalidInput("zero_velocity: empty seed");
  }
  if (steps < 0) {
    throw InvalidInput("zero_velocity: negative step count");
  }
  Tensor2 out(steps, seed.cols());
  out.rowwise() = seed.row(seed.rows() - 1);
  return out;
}

Tensor2 running_average(const Tensor2& seed, int k, int steps, AverageMode mode) {
  if (k < 1) {
    throw InvalidInput("running_average: k must be >= 1");
  }
  if (seed.rows() < k) {
    throw InvalidInput("running_average: seed has " + std::to_string(seed.rows()) +
                       " frames, need k = " + std::to_string(k));
  }
  if (steps < 0) {
    throw InvalidInput("running_average: negative step count");
  }
  if (k == 1) {
    return zero_velocity(seed, steps);
  }
  Tensor2 out(steps, seed.cols());
  if (mode == AverageMode::kConstant) {
    const RowVector mean = seed.bottomRows(k).colwise().mean();
    out.rowwise() = mean;
    return out;
  }
  // Window over [seed; out] ending just before the frame being produced.
  Tensor2 history(seed.rows() + steps, seed.cols());
  history.topRows(seed.rows()) = seed;
  for (int t = 0; t < steps; ++t) {
    const Eigen::Index end = seed.rows() + t;
    const RowVector mean = history.middleRows(end - k, k).colwise().mean();
    history.row(end) = mean;
    out.row(t) = mean;
  }
  return out;
}

}  // namespace motionseq::baselines
