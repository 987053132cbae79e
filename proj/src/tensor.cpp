#include "motionseq/tensor.hpp"

#include <cmath>
#include <string>

#include "motionseq/errors.hpp"

namespace motionseq {
namespace {

// Relative slack before clipping kicks in; keeps clip(clip(g)) == clip(g).
constexpr double kClipSlack = 1e-12;

std::string shape_of(const Tensor2& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

}  // namespace

Tensor2 affine(const Tensor2& x, const Tensor2& w, const Tensor2& b) {
  if (x.cols() != w.rows() || b.rows() != 1 || b.cols() != w.cols()) {
    throw InvalidInput("affine: shape mismatch x " + shape_of(x) + ", W " + shape_of(w) + ", b " +
                       shape_of(b));
  }
  Tensor2 out(x.rows(), w.cols());
  out.noalias() = x * w;
  out.rowwise() += b.row(0);
  return out;
}

double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor2 sigmoid(const Tensor2& x) {
  return x.unaryExpr([](double v) { return sigmoid(v); });
}

Tensor2 tanh(const Tensor2& x) {
  return x.unaryExpr([](double v) { return std::tanh(v); });
}

void require_finite(const Tensor2& t, std::string_view op) {
  if (!t.allFinite()) {
    throw NumericError("non-finite value produced by " + std::string(op));
  }
}

double global_norm(std::span<const Tensor2* const> tensors) {
  double sum = 0.0;
  for (const Tensor2* t : tensors) {
    sum += t->squaredNorm();
  }
  return std::sqrt(sum);
}

double clip_gradients(std::span<Tensor2* const> grads, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw InvalidInput("clip_gradients: max_norm must be positive");
  }
  double sum = 0.0;
  for (const Tensor2* g : grads) {
    sum += g->squaredNorm();
  }
  const double norm = std::sqrt(sum);
  if (norm > max_norm * (1.0 + kClipSlack)) {
    const double scale = max_norm / norm;
    for (Tensor2* g : grads) {
      *g *= scale;
    }
  }
  return norm;
}

void sgd_step(std::span<Tensor2* const> params, std::span<const Tensor2* const> grads, double lr) {
  if (params.size() != grads.size()) {
    throw InvalidInput("sgd_step: parameter and gradient counts differ");
  }
  if (!(lr > 0.0)) {
    throw InvalidInput("sgd_step: learning rate must be positive");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->rows() != grads[i]->rows() || params[i]->cols() != grads[i]->cols()) {
      throw InvalidInput("sgd_step: shape mismatch " + shape_of(*params[i]) + " vs " +
                         shape_of(*grads[i]));
    }
    *params[i] -= lr * *grads[i];
  }
}

}  // namespace motionseq
