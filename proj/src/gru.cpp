#include "motionseq/gru.hpp"

#include <cmath>

#include "motionseq/errors.hpp"

namespace motionseq {
namespace {

Tensor2 uniform_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Tensor2 m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    double v = dist(rng);
    while (v == -scale) v = dist(rng);
    m.data()[i] = v;
  }
  return m;
}

void check_cell_shapes(const Tensor2& x, const Tensor2& h, const GruParams& p) {
  if (x.cols() != p.input_width() || h.cols() != p.hidden() || x.rows() != h.rows()) {
    throw InvalidInput("gru_cell: shape mismatch (x " + std::to_string(x.rows()) + "x" +
                       std::to_string(x.cols()) + ", h " + std::to_string(h.rows()) + "x" +
                       std::to_string(h.cols()) + ", params D_in=" +
                       std::to_string(p.input_width()) + " H=" + std::to_string(p.hidden()) + ")");
  }
}

// Sum over the batch dimension, as a 1 x N row.
Tensor2 column_sum(const Tensor2& m) { return m.colwise().sum(); }

}  // namespace

GruParams GruParams::zeros(Eigen::Index input_width, Eigen::Index hidden, Eigen::Index output_width) {
  if (input_width <= 0 || hidden <= 0 || output_width <= 0) {
    throw InvalidInput("GruParams: dimensions must be positive");
  }
  GruParams p;
  p.w_z = p.w_r = p.w_h = Tensor2::Zero(input_width, hidden);
  p.u_z = p.u_r = p.u_h = Tensor2::Zero(hidden, hidden);
  p.b_z = p.b_r = p.b_h = Tensor2::Zero(1, hidden);
  p.w_out = Tensor2::Zero(hidden, output_width);
  p.b_out = Tensor2::Zero(1, output_width);
  return p;
}

std::array<Tensor2*, GruParams::kTensorCount> GruParams::tensors() {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h, &w_out, &b_out};
}

std::array<const Tensor2*, GruParams::kTensorCount> GruParams::tensors() const {
  return {&w_z, &w_r, &w_h, &u_z, &u_r, &u_h, &b_z, &b_r, &b_h, &w_out, &b_out};
}

bool GruParams::same_shape(const GruParams& other) const {
  const auto a = tensors();
  const auto b = other.tensors();
  for (std::size_t i = 0; i < kTensorCount; ++i) {
    if (a[i]->rows() != b[i]->rows() || a[i]->cols() != b[i]->cols()) return false;
  }
  return true;
}

void GruParams::set_zero() {
  for (Tensor2* t : tensors()) t->setZero();
}

GruParams init_params(Rng& rng, Eigen::Index input_width, Eigen::Index hidden,
                      Eigen::Index output_width) {
  GruParams p = GruParams::zeros(input_width, hidden, output_width);
  const double s_in = 1.0 / std::sqrt(static_cast<double>(input_width));
  const double s_hid = 1.0 / std::sqrt(static_cast<double>(hidden));
  p.w_z = uniform_matrix(rng, input_width, hidden, s_in);
  p.w_r = uniform_matrix(rng, input_width, hidden, s_in);
  p.w_h = uniform_matrix(rng, input_width, hidden, s_in);
  p.u_z = uniform_matrix(rng, hidden, hidden, s_hid);
  p.u_r = uniform_matrix(rng, hidden, hidden, s_hid);
  p.u_h = uniform_matrix(rng, hidden, hidden, s_hid);
  p.w_out = uniform_matrix(rng, hidden, output_width, s_hid);
  return p;
}

Tensor2 gru_cell(const Tensor2& x, const Tensor2& h, const GruParams& p) {
  GruStepCache cache;
  return gru_cell(x, h, p, cache);
}

Tensor2 gru_cell(const Tensor2& x, const Tensor2& h, const GruParams& p, GruStepCache& cache) {
  check_cell_shapes(x, h, p);
  cache.x = x;
  cache.h_prev = h;

  Tensor2 pre_z = affine(x, p.w_z, p.b_z);
  pre_z.noalias() += h * p.u_z;
  cache.z = sigmoid(pre_z);

  Tensor2 pre_r = affine(x, p.w_r, p.b_r);
  pre_r.noalias() += h * p.u_r;
  cache.r = sigmoid(pre_r);

  const Tensor2 reset_h = cache.r.cwiseProduct(h);
  Tensor2 pre_h = affine(x, p.w_h, p.b_h);
  pre_h.noalias() += reset_h * p.u_h;
  cache.candidate = motionseq::tanh(pre_h);

  Tensor2 out = cache.z.cwiseProduct(h) +
                (1.0 - cache.z.array()).matrix().cwiseProduct(cache.candidate);
  require_finite(out, "gru_cell");
  return out;
}

void gru_cell_backward(const GruStepCache& c, const Tensor2& dh_next, const GruParams& p,
                       GruParams& g, Tensor2* dx, Tensor2& dh_prev) {
  const auto& z = c.z.array();
  const auto& r = c.r.array();
  const auto& cand = c.candidate.array();
  const auto& h = c.h_prev.array();
  const auto& dh = dh_next.array();

  const Tensor2 d_pre_h = (dh * (1.0 - z) * (1.0 - cand.square())).matrix();
  const Tensor2 d_pre_z = (dh * (h - cand) * z * (1.0 - z)).matrix();

  const Tensor2 reset_h = (r * h).matrix();
  Tensor2 d_reset_h(d_pre_h.rows(), p.hidden());
  d_reset_h.noalias() = d_pre_h * p.u_h.transpose();
  const Tensor2 d_pre_r = (d_reset_h.array() * h * r * (1.0 - r)).matrix();

  g.w_z.noalias() += c.x.transpose() * d_pre_z;
  g.w_r.noalias() += c.x.transpose() * d_pre_r;
  g.w_h.noalias() += c.x.transpose() * d_pre_h;
  g.u_z.noalias() += c.h_prev.transpose() * d_pre_z;
  g.u_r.noalias() += c.h_prev.transpose() * d_pre_r;
  g.u_h.noalias() += reset_h.transpose() * d_pre_h;
  g.b_z += column_sum(d_pre_z);
  g.b_r += column_sum(d_pre_r);
  g.b_h += column_sum(d_pre_h);

  dh_prev = (dh * z + d_reset_h.array() * r).matrix();
  dh_prev.noalias() += d_pre_z * p.u_z.transpose();
  dh_prev.noalias() += d_pre_r * p.u_r.transpose();

  if (dx != nullptr) {
    dx->resize(c.x.rows(), c.x.cols());
    dx->noalias() = d_pre_z * p.w_z.transpose();
    dx->noalias() += d_pre_r * p.w_r.transpose();
    dx->noalias() += d_pre_h * p.w_h.transpose();
  }
}

Tensor2 output_decoder(const Tensor2& h, const GruParams& p) {
  if (h.cols() != p.hidden()) {
    throw InvalidInput("output_decoder: hidden width " + std::to_string(h.cols()) +
                       " does not match params H=" + std::to_string(p.hidden()));
  }
  return affine(h, p.w_out, p.b_out);
}

}  // namespace motionseq
