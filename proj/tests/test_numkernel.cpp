#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "motionseq/checkpoint.hpp"
#include "motionseq/errors.hpp"
#include "motionseq/tensor.hpp"

using namespace motionseq;

namespace {

Tensor2 random_tensor(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor2 t(r, c);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = n(rng);
  return t;
}

}  // namespace

TEST_CASE("affine") {
  Tensor2 b(1, 2);
  b << 0.5, -1.5;
  const Tensor2 zero = Tensor2::Zero(3, 2);
  const Tensor2 w = Tensor2::Constant(2, 2, 7.0);
  const Tensor2 out = affine(zero, w, b);
  for (Eigen::Index i = 0; i < 3; ++i) CHECK(out.row(i) == b.row(0));

  std::mt19937_64 rng(1);
  const Tensor2 x = random_tensor(rng, 4, 3);
  CHECK(affine(x, Tensor2::Identity(3, 3), Tensor2::Zero(1, 3)) == x);

  Tensor2 x2(2, 3), w2(3, 2), b2(1, 2);
  x2 << 1, 2, 3, -1, 0, 2;
  w2 << 1, 0, 0, 1, 2, -1;
  b2 << 0.5, 1;
  // [1*1+2*0+3*2, 1*0+2*1+3*(-1)] = [7, -1]; [-1+0+4, 0+0-2] = [3, -2]
  Tensor2 expected(2, 2);
  expected << 7.5, 0, 3.5, -1;
  CHECK(affine(x2, w2, b2) == expected);

  CHECK_THROWS_AS(affine(x2, Tensor2::Zero(2, 2), b2), InvalidInput);
  CHECK_THROWS_AS(affine(x2, w2, Tensor2::Zero(1, 3)), InvalidInput);
}

TEST_CASE("sigmoid and tanh") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(std::tanh(0.0) == 0.0);
  CHECK(sigmoid(710.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-710.0)));
  CHECK(sigmoid(-710.0) >= 0.0);
  for (double x = -40.0; x <= 40.0; x += 0.37) {
    CHECK(std::abs(sigmoid(-x) - (1.0 - sigmoid(x))) <= 1e-15);
  }
  Tensor2 t(1, 3);
  t << -1000.0, 0.0, 1000.0;
  const Tensor2 s = sigmoid(t);
  CHECK(s.allFinite());
  CHECK(s(0, 1) == 0.5);
  CHECK(motionseq::tanh(t)(0, 2) == 1.0);
}

TEST_CASE("require_finite names the op") {
  Tensor2 t = Tensor2::Zero(2, 2);
  CHECK_NOTHROW(require_finite(t, "x"));
  t(1, 1) = std::nan("");
  try {
    require_finite(t, "some_op");
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("some_op") != std::string::npos);
  }
}

TEST_CASE("clip_gradients") {
  // Global norm 10: entries 6 and 8.
  Tensor2 a(1, 1), b(1, 1);
  a << 6.0;
  b << 8.0;
  std::vector<Tensor2*> g{&a, &b};
  CHECK(clip_gradients(g, 5.0) == 10.0);
  CHECK(a(0, 0) == 3.0);
  CHECK(b(0, 0) == 4.0);

  Tensor2 c(1, 2);
  c << 1.8, 2.4;  // norm 3
  const Tensor2 before = c;
  std::vector<Tensor2*> g2{&c};
  clip_gradients(g2, 5.0);
  CHECK(c == before);

  CHECK_THROWS_AS(clip_gradients(g2, 0.0), InvalidInput);
}

TEST_CASE("clip_gradients property: post-clip norm and idempotence") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> scale(0.01, 50.0);
  for (int trial = 0; trial < 500; ++trial) {
    Tensor2 a = random_tensor(rng, 3, 4, scale(rng));
    Tensor2 b = random_tensor(rng, 1, 4, scale(rng));
    std::vector<Tensor2*> g{&a, &b};
    const double n = clip_gradients(g, 5.0);
    std::vector<const Tensor2*> cg{&a, &b};
    CHECK(std::abs(global_norm(cg) - std::min(n, 5.0)) <= 1e-12 * std::max(1.0, n));

    const Tensor2 a1 = a, b1 = b;
    clip_gradients(g, 5.0);
    CHECK(a == a1);
    CHECK(b == b1);
  }
}

TEST_CASE("sgd_step") {
  Tensor2 p = Tensor2::Constant(2, 2, 1.0);
  const Tensor2 zero = Tensor2::Zero(2, 2);
  std::vector<Tensor2*> ps{&p};
  std::vector<const Tensor2*> gs{&zero};
  sgd_step(ps, gs, 0.05);
  CHECK(p == Tensor2::Constant(2, 2, 1.0));

  const Tensor2 two = Tensor2::Constant(2, 2, 2.0);
  std::vector<const Tensor2*> gs2{&two};
  sgd_step(ps, gs2, 0.05);
  CHECK(p(0, 0) == doctest::Approx(0.9).epsilon(1e-15));

  const Tensor2 wrong = Tensor2::Zero(3, 2);
  std::vector<const Tensor2*> bad{&wrong};
  CHECK_THROWS_AS(sgd_step(ps, bad, 0.05), InvalidInput);
  CHECK_THROWS_AS(sgd_step(ps, gs, 0.0), InvalidInput);
}

TEST_CASE("sgd_step: two steps vs one summed step on an affine toy") {
  // L(W) = sum(x W) has gradient x^T 1, independent of W, so two steps with
  // lr equal one step with the summed gradient.
  Tensor2 x(1, 3);
  x << 0.5, -2.0, 1.25;
  const Tensor2 grad = x.transpose() * Tensor2::Ones(1, 2);
  Tensor2 w_two = Tensor2::Constant(3, 2, 0.1);
  Tensor2 w_one = w_two;
  std::vector<Tensor2*> p_two{&w_two}, p_one{&w_one};
  std::vector<const Tensor2*> g{&grad};
  sgd_step(p_two, g, 0.005);
  sgd_step(p_two, g, 0.005);
  const Tensor2 summed = grad + grad;
  std::vector<const Tensor2*> gsum{&summed};
  sgd_step(p_one, gsum, 0.005);
  CHECK((w_two - w_one).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(w_one(1, 0) == doctest::Approx(0.1 + 0.005 * 2 * 2.0));
}

TEST_CASE("tensor container round trip and validation") {
  std::mt19937_64 rng(3);
  TensorContainer c;
  c.metadata = R"({"k": 1})";
  c.add("W_z", random_tensor(rng, 3, 5));
  c.add("b_z", random_tensor(rng, 1, 5));
  c.add("empty", Tensor2(0, 4));
  CHECK_THROWS_AS(c.add("W_z", Tensor2::Zero(1, 1)), InvalidInput);

  std::stringstream buf;
  c.write(buf);
  const TensorContainer back = TensorContainer::read(buf);
  CHECK(back.metadata == c.metadata);
  REQUIRE(back.entries().size() == 3);
  CHECK(back.get("W_z", 3, 5) == c.get("W_z"));
  CHECK(back.get("empty").rows() == 0);
  CHECK_THROWS_AS(back.get("W_z", 5, 3), FormatError);
  CHECK_THROWS_AS(back.get("missing"), FormatError);

  std::stringstream bad("NOTACKPT");
  CHECK_THROWS_AS(TensorContainer::read(bad), FormatError);

  std::string bytes;
  {
    std::stringstream s;
    c.write(s);
    bytes = s.str();
  }
  std::stringstream truncated(bytes.substr(0, bytes.size() - 9));
  CHECK_THROWS_AS(TensorContainer::read(truncated), FormatError);
}
