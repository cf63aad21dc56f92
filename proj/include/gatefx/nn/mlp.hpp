// Dense multilayer perceptrons with explicit forward and backward passes.
//
// Batched routines take one sample per column: an input batch is in x B and
// the output is out x B. Everything is templated on the scalar type; the rest
// of the library instantiates it with double.
#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gatefx::nn {

enum class Activation : std::uint8_t { kRelu = 0, kTanh = 1, kIdentity = 2 };

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Layer {
  Mat<Scalar> weight;  // out x in
  Vec<Scalar> bias;    // out
  Activation activation = Activation::kIdentity;

  Eigen::Index in_dim() const { return weight.cols(); }
  Eigen::Index out_dim() const { return weight.rows(); }
};

template <typename Scalar>
struct MlpParams {
  std::vector<Layer<Scalar>> layers;

  Eigen::Index in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  Eigen::Index out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
  Eigen::Index num_parameters() const {
    Eigen::Index n = 0;
    for (const auto& l : layers) n += l.weight.size() + l.bias.size();
    return n;
  }
};

/// Per-layer parameter gradients plus the gradient with respect to the input.
/// For batched backward passes `input` holds one column per sample and the
/// parameter gradients are summed over the batch.
template <typename Scalar>
struct GradBundle {
  std::vector<Mat<Scalar>> weight;
  std::vector<Vec<Scalar>> bias;
  Mat<Scalar> input;
};

/// Activations recorded by a batched forward pass: `post[0]` is the input,
/// `post[l+1]` the output of layer l.
template <typename Scalar>
struct ForwardCache {
  std::vector<Mat<Scalar>> post;

  const Mat<Scalar>& output() const { return post.back(); }
};

namespace detail {

template <typename Derived>
void activate_inplace(Eigen::MatrixBase<Derived>& x, Activation act) {
  switch (act) {
    case Activation::kRelu:
      x = x.cwiseMax(typename Derived::Scalar(0));
      break;
    case Activation::kTanh:
      x = x.array().tanh().matrix();
      break;
    case Activation::kIdentity:
      break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through
// the post-activation value y.
template <typename Scalar>
void apply_activation_derivative(Mat<Scalar>& grad, const Mat<Scalar>& y, Activation act) {
  switch (act) {
    case Activation::kRelu:
      grad = (y.array() > Scalar(0)).select(grad, Scalar(0));
      break;
    case Activation::kTanh:
      grad.array() *= (Scalar(1) - y.array().square());
      break;
    case Activation::kIdentity:
      break;
  }
}

}  // namespace detail

inline std::string to_string(Activation a) {
  switch (a) {
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kIdentity: return "identity";
  }
  return "unknown";
}

/// Builds a network with the given layer widths (`dims.front()` is the input
/// width). Hidden layers use `hidden`, the last layer uses `output`. Weights
/// and biases are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
template <typename Scalar, typename Rng>
MlpParams<Scalar> make_mlp(const std::vector<int>& dims, Activation hidden, Activation output,
                           Rng& rng) {
  if (dims.size() < 2) throw ShapeError("make_mlp: need at least input and output widths");
  MlpParams<Scalar> p;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    const int in = dims[l];
    const int out = dims[l + 1];
    if (in <= 0 || out <= 0) throw ShapeError("make_mlp: widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer<Scalar> layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    // Row-major fill order so the draw sequence matches the snapshot layout.
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = static_cast<Scalar>(u(rng));
    for (int r = 0; r < out; ++r) layer.bias(r) = static_cast<Scalar>(u(rng));
    layer.activation = (l + 2 == dims.size()) ? output : hidden;
    p.layers.push_back(std::move(layer));
  }
  return p;
}

/// Same architecture with every weight and bias set to zero.
template <typename Scalar>
MlpParams<Scalar> zeros_like(const MlpParams<Scalar>& p) {
  MlpParams<Scalar> z = p;
  for (auto& l : z.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return z;
}

template <typename Scalar>
void validate(const MlpParams<Scalar>& p) {
  if (p.layers.empty()) throw ShapeError("mlp: no layers");
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& layer = p.layers[l];
    if (layer.bias.size() != layer.out_dim())
      throw ShapeError("mlp: bias length does not match layer " + std::to_string(l));
    if (l + 1 < p.layers.size() && p.layers[l + 1].in_dim() != layer.out_dim())
      throw ShapeError("mlp: layer " + std::to_string(l) + " does not chain into the next");
  }
}

template <typename Scalar>
bool all_finite(const MlpParams<Scalar>& p) {
  for (const auto& l : p.layers)
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  return true;
}

/// Batched forward pass that keeps every layer output for `backward`.
template <typename Scalar, typename Derived>
ForwardCache<Scalar> forward_cached(const MlpParams<Scalar>& p,
                                    const Eigen::MatrixBase<Derived>& input) {
  if (p.layers.empty() || input.rows() != p.in_dim())
    throw ShapeError("mlp_forward: input has " + std::to_string(input.rows()) +
                     " rows, network expects " + std::to_string(p.in_dim()));
  ForwardCache<Scalar> cache;
  cache.post.reserve(p.layers.size() + 1);
  cache.post.emplace_back(input);
  for (const auto& layer : p.layers) {
    Mat<Scalar> z(layer.out_dim(), input.cols());
    z.noalias() = layer.weight * cache.post.back();
    z.colwise() += layer.bias;
    detail::activate_inplace(z, layer.activation);
    cache.post.push_back(std::move(z));
  }
  return cache;
}

/// Batched forward pass without retained intermediates.
template <typename Scalar, typename Derived>
Mat<Scalar> forward_batch(const MlpParams<Scalar>& p, const Eigen::MatrixBase<Derived>& input) {
  if (p.layers.empty() || input.rows() != p.in_dim())
    throw ShapeError("mlp_forward: input has " + std::to_string(input.rows()) +
                     " rows, network expects " + std::to_string(p.in_dim()));
  Mat<Scalar> x = input;
  for (const auto& layer : p.layers) {
    Mat<Scalar> z(layer.out_dim(), x.cols());
    z.noalias() = layer.weight * x;
    z.colwise() += layer.bias;
    detail::activate_inplace(z, layer.activation);
    x.swap(z);
  }
  return x;
}

template <typename Scalar, typename Derived>
Vec<Scalar> forward(const MlpParams<Scalar>& p, const Eigen::MatrixBase<Derived>& input) {
  if (input.cols() != 1) throw ShapeError("mlp_forward: expected a single input vector");
  return forward_batch(p, input).col(0);
}

/// Gradients of sum_b <output_b, upstream_b> with respect to parameters and
/// inputs, using intermediates from `forward_cached`.
template <typename Scalar, typename Derived>
GradBundle<Scalar> backward(const MlpParams<Scalar>& p, const ForwardCache<Scalar>& cache,
                            const Eigen::MatrixBase<Derived>& upstream) {
  if (cache.post.size() != p.layers.size() + 1)
    throw ShapeError("mlp_backward: cache does not belong to this network");
  if (upstream.rows() != p.out_dim() || upstream.cols() != cache.output().cols())
    throw ShapeError("mlp_backward: upstream gradient shape mismatch");
  const std::size_t n = p.layers.size();
  GradBundle<Scalar> g;
  g.weight.resize(n);
  g.bias.resize(n);
  Mat<Scalar> delta = upstream;
  for (std::size_t l = n; l-- > 0;) {
    const auto& layer = p.layers[l];
    detail::apply_activation_derivative(delta, cache.post[l + 1], layer.activation);
    g.weight[l].noalias() = delta * cache.post[l].transpose();
    g.bias[l] = delta.rowwise().sum();
    Mat<Scalar> prev(layer.in_dim(), delta.cols());
    prev.noalias() = layer.weight.transpose() * delta;
    delta.swap(prev);
  }
  g.input = std::move(delta);
  return g;
}

/// Single-sample convenience: recomputes the forward pass.
template <typename Scalar, typename D1, typename D2>
GradBundle<Scalar> backward(const MlpParams<Scalar>& p, const Eigen::MatrixBase<D1>& input,
                            const Eigen::MatrixBase<D2>& upstream) {
  return backward(p, forward_cached(p, input), upstream);
}

template <typename Scalar>
GradBundle<Scalar> zero_grads(const MlpParams<Scalar>& p) {
  GradBundle<Scalar> g;
  for (const auto& l : p.layers) {
    g.weight.push_back(Mat<Scalar>::Zero(l.out_dim(), l.in_dim()));
    g.bias.push_back(Vec<Scalar>::Zero(l.out_dim()));
  }
  g.input = Mat<Scalar>::Zero(p.in_dim(), 1);
  return g;
}

template <typename Scalar>
Scalar global_norm(const GradBundle<Scalar>& g) {
  Scalar sq(0);
  for (const auto& w : g.weight) sq += w.squaredNorm();
  for (const auto& b : g.bias) sq += b.squaredNorm();
  return std::sqrt(sq);
}

/// Rescales parameter gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
template <typename Scalar>
Scalar clip_global_norm(GradBundle<Scalar>& g, Scalar max_norm) {
  const Scalar norm = global_norm(g);
  if (norm > max_norm && norm > Scalar(0)) {
    const Scalar s = max_norm / norm;
    for (auto& w : g.weight) w *= s;
    for (auto& b : g.bias) b *= s;
  }
  return norm;
}

/// target <- tau * online + (1 - tau) * target
template <typename Scalar>
void polyak_update(MlpParams<Scalar>& target, const MlpParams<Scalar>& online, Scalar tau) {
  if (!(tau > Scalar(0) && tau <= Scalar(1)))
    throw std::invalid_argument("polyak_update: tau must lie in (0, 1]");
  if (target.layers.size() != online.layers.size())
    throw ShapeError("polyak_update: layer count mismatch");
  for (std::size_t l = 0; l < target.layers.size(); ++l) {
    auto& t = target.layers[l];
    const auto& o = online.layers[l];
    if (t.weight.rows() != o.weight.rows() || t.weight.cols() != o.weight.cols())
      throw ShapeError("polyak_update: layer shape mismatch");
    if (tau == Scalar(1)) {
      t.weight = o.weight;
      t.bias = o.bias;
    } else {
      t.weight = tau * o.weight + (Scalar(1) - tau) * t.weight;
      t.bias = tau * o.bias + (Scalar(1) - tau) * t.bias;
    }
  }
}

}  // namespace gatefx::nn
