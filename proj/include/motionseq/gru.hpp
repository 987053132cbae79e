#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string_view>

#include "motionseq/tensor.hpp"

namespace motionseq {

using Rng = std::mt19937_64;

// Single GRU layer plus the linear decoder that maps the hidden state back to
// joint space. There is no input encoder: frames enter the gate
// pre-activations directly.
//
//   z  = sigmoid(x W_z + h U_z + b_z)          keep-previous-state gate
//   r  = sigmoid(x W_r + h U_r + b_r)
//   h~ = tanh(x W_h + (r * h) U_h + b_h)
//   h' = z * h + (1 - z) * h~
//   y  = h' W_out + b_out
struct GruParams {
  Tensor2 w_z, w_r, w_h;  // [D_in x H]
  Tensor2 u_z, u_r, u_h;  // [H x H]
  Tensor2 b_z, b_r, b_h;  // [1 x H]
  Tensor2 w_out;          // [H x D_out]
  Tensor2 b_out;          // [1 x D_out]

  static constexpr std::size_t kTensorCount = 11;
  static constexpr std::array<std::string_view, kTensorCount> kNames = {
      "W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h", "W_out", "b_out"};

  static GruParams zeros(Eigen::Index input_width, Eigen::Index hidden, Eigen::Index output_width);

  Eigen::Index input_width() const { return w_z.rows(); }
  Eigen::Index hidden() const { return u_z.rows(); }
  Eigen::Index output_width() const { return w_out.cols(); }

  // Tensors in kNames order.
  std::array<Tensor2*, kTensorCount> tensors();
  std::array<const Tensor2*, kTensorCount> tensors() const;

  bool same_shape(const GruParams& other) const;
  void set_zero();
};

// Uniform(-s, s) weights with s = 1/sqrt(fan_in) per matrix, zero biases.
GruParams init_params(Rng& rng, Eigen::Index input_width, Eigen::Index hidden,
                      Eigen::Index output_width);

// Activations of one cell step, kept for the backward pass.
struct GruStepCache {
  Tensor2 x;
  Tensor2 h_prev;
  Tensor2 z;
  Tensor2 r;
  Tensor2 candidate;
};

Tensor2 gru_cell(const Tensor2& x, const Tensor2& h, const GruParams& p);
Tensor2 gru_cell(const Tensor2& x, const Tensor2& h, const GruParams& p, GruStepCache& cache);

// Accumulates parameter gradients of one cell step into `grads` given dL/dh'.
// Writes dL/dx into dx (when non-null) and dL/dh into dh_prev.
void gru_cell_backward(const GruStepCache& cache, const Tensor2& dh_next, const GruParams& p,
                       GruParams& grads, Tensor2* dx, Tensor2& dh_prev);

// Linear projection h W_out + b_out, no activation.
Tensor2 output_decoder(const Tensor2& h, const GruParams& p);

}  // namespace motionseq
