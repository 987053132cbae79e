#pragma once

#include <Eigen/Core>
#include <span>
#include <string_view>

namespace motionseq {

// Dense row-major double matrix. Batches are laid out one sample per row.
using Tensor2 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

// x [B x I] * w [I x O] + b [1 x O], bias broadcast over rows.
Tensor2 affine(const Tensor2& x, const Tensor2& w, const Tensor2& b);

// Numerically stable logistic; no overflow for any finite input.
double sigmoid(double x);
Tensor2 sigmoid(const Tensor2& x);
Tensor2 tanh(const Tensor2& x);

// Throws NumericError naming `op` if t holds a NaN or Inf.
void require_finite(const Tensor2& t, std::string_view op);

// Global L2 norm over every entry of every tensor.
double global_norm(std::span<const Tensor2* const> tensors);

// Rescales all tensors by max_norm / N when the global norm N exceeds
// max_norm. Returns the norm before clipping. Idempotent: a set whose norm
// already equals max_norm up to rounding is left untouched.
double clip_gradients(std::span<Tensor2* const> grads, double max_norm);

// p <- p - lr * g for each pair.
void sgd_step(std::span<Tensor2* const> params, std::span<const Tensor2* const> grads, double lr);

}  // namespace motionseq
