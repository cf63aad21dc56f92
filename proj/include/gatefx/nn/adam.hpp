// Bias-corrected Adam over MlpParams.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "gatefx/nn/mlp.hpp"

namespace gatefx::nn {

template <typename Scalar>
struct AdamState {
  std::vector<Mat<Scalar>> m_weight, v_weight;
  std::vector<Vec<Scalar>> m_bias, v_bias;
  std::uint64_t step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
};

template <typename Scalar>
AdamState<Scalar> make_adam(const MlpParams<Scalar>& p) {
  AdamState<Scalar> s;
  for (const auto& l : p.layers) {
    s.m_weight.push_back(Mat<Scalar>::Zero(l.out_dim(), l.in_dim()));
    s.v_weight.push_back(Mat<Scalar>::Zero(l.out_dim(), l.in_dim()));
    s.m_bias.push_back(Vec<Scalar>::Zero(l.out_dim()));
    s.v_bias.push_back(Vec<Scalar>::Zero(l.out_dim()));
  }
  return s;
}

namespace detail {

template <typename P, typename G, typename S>
void adam_apply(P& param, const G& grad, S& m, S& v, typename P::Scalar beta1,
                typename P::Scalar beta2, typename P::Scalar step_size,
                typename P::Scalar eps_hat) {
  m = beta1 * m + (1 - beta1) * grad;
  v = beta2 * v + (1 - beta2) * grad.cwiseAbs2();
  param.array() -= step_size * m.array() / (v.array().sqrt() + eps_hat);
}

}  // namespace detail

/// One Adam step in place. The bias correction is folded into the step size
/// and epsilon: lr * mhat / (sqrt(vhat) + eps) with mhat = m / (1 - b1^t),
/// vhat = v / (1 - b2^t).
template <typename Scalar>
void adam_update(MlpParams<Scalar>& p, const GradBundle<Scalar>& g, AdamState<Scalar>& s,
                 Scalar lr) {
  if (!(lr > Scalar(0))) throw std::invalid_argument("adam_update: learning rate must be positive");
  const std::size_t n = p.layers.size();
  if (g.weight.size() != n || g.bias.size() != n || s.m_weight.size() != n)
    throw ShapeError("adam_update: layer count mismatch");
  for (std::size_t l = 0; l < n; ++l) {
    if (g.weight[l].rows() != p.layers[l].weight.rows() ||
        g.weight[l].cols() != p.layers[l].weight.cols() ||
        g.bias[l].size() != p.layers[l].bias.size() ||
        s.m_weight[l].rows() != p.layers[l].weight.rows() ||
        s.m_weight[l].cols() != p.layers[l].weight.cols())
      throw ShapeError("adam_update: shape mismatch in layer " + std::to_string(l));
  }
  ++s.step;
  const Scalar t = static_cast<Scalar>(s.step);
  const Scalar bc1 = Scalar(1) - std::pow(s.beta1, t);
  const Scalar bc2 = Scalar(1) - std::pow(s.beta2, t);
  const Scalar sqrt_bc2 = std::sqrt(bc2);
  const Scalar step_size = lr * sqrt_bc2 / bc1;
  const Scalar eps_hat = s.eps * sqrt_bc2;
  for (std::size_t l = 0; l < n; ++l) {
    detail::adam_apply(p.layers[l].weight, g.weight[l], s.m_weight[l], s.v_weight[l], s.beta1,
                       s.beta2, step_size, eps_hat);
    detail::adam_apply(p.layers[l].bias, g.bias[l], s.m_bias[l], s.v_bias[l], s.beta1, s.beta2,
                       step_size, eps_hat);
  }
}

}  // namespace gatefx::nn
