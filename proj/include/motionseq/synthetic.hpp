#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "motionseq/dataio.hpp"

namespace motionseq::synthetic {

// Multi-sinusoid motion: every varying dim is a fixed mix of three
// sinusoids. Each sequence starts at its own random time shift, so clips
// differ in phase.
struct SinusoidOptions {
  std::vector<std::string> actions = {"walking"};
  std::vector<int> train_subjects = {1, 6, 7, 8};
  int test_subject = 5;
  int trials = 2;
  int frames = 400;
  double frame_interval = 0.04;
  int width = 99;
  int varying_dims = 54;  // dims kGlobalDims .. kGlobalDims + varying_dims - 1
  std::array<double, 3> frequencies_hz = {0.35, 0.8, 1.3};
  double amplitude = 0.3;
  std::uint64_t seed = 1;
};

DatasetSplit make_sinusoid_split(const SinusoidOptions& options);

// Writes <root>/S<subject>/<action>_<trial>.txt for every sequence.
void write_dataset(const std::filesystem::path& root, const DatasetSplit& split);

}  // namespace motionseq::synthetic
