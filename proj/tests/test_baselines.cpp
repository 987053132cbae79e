#include "motionseq/baselines.hpp"

#include <random>

#include "doctest.h"
#include "motionseq/errors.hpp"

using namespace motionseq;
using namespace motionseq::baselines;

namespace {

Tensor2 random_seed(std::uint64_t s, Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(s);
  std::normal_distribution<double> n(0.0, 1.0);
  Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return t;
}

}  // namespace

TEST_CASE("zero_velocity repeats the last frame") {
  const Tensor2 seed = random_seed(1, 6, 9);
  const Tensor2 out = zero_velocity(seed, 10);
  REQUIRE(out.rows() == 10);
  for (Eigen::Index t = 0; t < 10; ++t) CHECK(out.row(t) == seed.row(5));
  CHECK(zero_velocity(seed, 0).rows() == 0);
  CHECK_THROWS_AS(zero_velocity(Tensor2(0, 9), 3), InvalidInput);
}

TEST_CASE("running_average holds the mean of the last k frames") {
  Tensor2 seed(5, 2);
  seed << 0, 100,
          1, 10,
          2, 20,
          3, 30,
          6, 40;
  const Tensor2 out = running_average(seed, 4, 3);
  for (Eigen::Index t = 0; t < 3; ++t) {
    CHECK(out(t, 0) == 3.0);   // (1+2+3+6)/4
    CHECK(out(t, 1) == 25.0);  // (10+20+30+40)/4
  }
  const Tensor2 two = running_average(seed, 2, 1);
  CHECK(two(0, 0) == 4.5);
  CHECK(two(0, 1) == 35.0);

  CHECK_THROWS_AS(running_average(seed, 0, 3), InvalidInput);
  CHECK_THROWS_AS(running_average(seed, 6, 3), InvalidInput);
}

TEST_CASE("baseline invariants") {
  const Tensor2 seed = random_seed(2, 8, 12);
  CHECK(running_average(seed, 1, 7) == zero_velocity(seed, 7));
  CHECK(running_average(seed, 1, 7, AverageMode::kAutoregressive) == zero_velocity(seed, 7));

  // A constant seed makes every baseline the same constant.
  const Tensor2 flat = Tensor2::Constant(8, 12, 0.375);
  CHECK(running_average(flat, 2, 5) == zero_velocity(flat, 5));
  CHECK(running_average(flat, 4, 5) == zero_velocity(flat, 5));
  CHECK(running_average(flat, 4, 5, AverageMode::kAutoregressive) == zero_velocity(flat, 5));
}

TEST_CASE("autoregressive running average folds outputs into the window") {
  Tensor2 seed(2, 1);
  seed << 0, 4;
  const Tensor2 out = running_average(seed, 2, 3, AverageMode::kAutoregressive);
  CHECK(out(0, 0) == 2.0);  // (0+4)/2
  CHECK(out(1, 0) == 3.0);  // (4+2)/2
  CHECK(out(2, 0) == 2.5);  // (2+3)/2
}
