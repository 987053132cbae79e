#pragma once

#include "motionseq/tensor.hpp"

namespace motionseq::baselines {

// Repeats the last seed frame. [T_in x D] -> [steps x D]
Tensor2 zero_velocity(const Tensor2& seed, int steps);

enum class AverageMode {
  kConstant,        // hold the mean of the last k seed frames
  kAutoregressive,  // each output is the mean of the k frames before it, outputs included
};

// Mean of the last k observed frames. k = 1 reduces to zero_velocity.
Tensor2 running_average(const Tensor2& seed, int k, int steps,
                        AverageMode mode = AverageMode::kConstant);

}  // namespace motionseq::baselines
