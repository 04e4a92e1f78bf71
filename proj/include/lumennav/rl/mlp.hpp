#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace lumennav::rl {

template <typename Scalar>
Scalar elu(Scalar z) {
  return z > Scalar(0) ? z : std::expm1(z);
}

template <typename Scalar>
Scalar elu_derivative(Scalar z) {
  return z > Scalar(0) ? Scalar(1) : std::exp(z);
}

/// Fully connected network with ELU hidden activations and a linear head.
/// With `d2rl` set, the raw input is concatenated onto the input of every
/// hidden layer after the first. Parameters live in one flat vector so an
/// optimizer can treat the network as a single point in parameter space.
/// Batches are column-major: one sample per column.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Tape {
    std::vector<Matrix> inputs;  // input to each layer (after concatenation)
    std::vector<Matrix> pre;     // pre-activation of each hidden layer
  };

  Mlp() = default;
  Mlp(int input_dim, std::vector<int> hidden, int output_dim, bool d2rl)
      : input_dim_(input_dim), output_dim_(output_dim), hidden_(std::move(hidden)), d2rl_(d2rl) {
    if (input_dim_ < 1 || output_dim_ < 1) throw std::invalid_argument("MLP dims must be positive");
    for (int h : hidden_) {
      if (h < 1) throw std::invalid_argument("MLP hidden widths must be positive");
    }
    int offset = 0;
    for (std::size_t l = 0; l <= hidden_.size(); ++l) {
      Layer layer;
      layer.in = layer_input_dim(l);
      layer.out = l < hidden_.size() ? hidden_[l] : output_dim_;
      layer.w_offset = offset;
      offset += layer.in * layer.out;
      layer.b_offset = offset;
      offset += layer.out;
      layers_.push_back(layer);
    }
    params_ = Vector::Zero(offset);
  }

  int input_dim() const { return input_dim_; }
  int output_dim() const { return output_dim_; }
  const std::vector<int>& hidden() const { return hidden_; }
  bool d2rl() const { return d2rl_; }
  int parameter_count() const { return static_cast<int>(params_.size()); }
  Vector& parameters() { return params_; }
  const Vector& parameters() const { return params_; }
  std::size_t layer_count() const { return layers_.size(); }

  /// Gaussian init with std gain / sqrt(fan_in); zero biases. The output
  /// layer uses `output_gain` (0 gives an all-zero head).
  void initialize(std::mt19937_64& rng, Scalar hidden_gain, Scalar output_gain) {
    std::normal_distribution<double> normal(0.0, 1.0);
    params_.setZero();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      const Scalar gain = l + 1 == layers_.size() ? output_gain : hidden_gain;
      const Scalar scale = gain / std::sqrt(static_cast<Scalar>(layer.in));
      for (int i = 0; i < layer.in * layer.out; ++i) {
        params_[layer.w_offset + i] = scale * static_cast<Scalar>(normal(rng));
      }
    }
  }

  Matrix forward(const Matrix& x) const {
    Tape tape;
    return forward(x, tape);
  }

  Matrix forward(const Matrix& x, Tape& tape) const {
    check_input(x);
    tape.inputs.resize(layers_.size());
    tape.pre.resize(hidden_.size());
    Matrix h = x;
    for (std::size_t l = 0; l < hidden_.size(); ++l) {
      tape.inputs[l] = concat_input(h, x, l);
      tape.pre[l] = affine(l, tape.inputs[l]);
      h = tape.pre[l].unaryExpr([](Scalar z) { return elu(z); });
    }
    const std::size_t out = hidden_.size();
    tape.inputs[out] = h;
    return affine(out, h);
  }

  /// Backpropagates dL/dy through the recorded forward pass. Parameter
  /// gradients are accumulated into `grad` (sized parameter_count()); the
  /// return value is dL/dx.
  Matrix backward(const Tape& tape, const Matrix& grad_output, Vector& grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("gradient size mismatch");
    const Eigen::Index batch = grad_output.cols();
    Matrix dx = Matrix::Zero(input_dim_, batch);
    Matrix g = grad_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      if (l < hidden_.size()) {
        g = g.cwiseProduct(tape.pre[l].unaryExpr([](Scalar z) { return elu_derivative(z); }));
      }
      const Layer& layer = layers_[l];
      Eigen::Map<Matrix> gw(grad.data() + layer.w_offset, layer.out, layer.in);
      Eigen::Map<Vector> gb(grad.data() + layer.b_offset, layer.out);
      gw.noalias() += g * tape.inputs[l].transpose();
      gb.noalias() += g.rowwise().sum();
      Matrix din = weight(l).transpose() * g;
      if (l == 0) {
        dx += din;
      } else if (d2rl_ && l < hidden_.size()) {
        const int prev = hidden_[l - 1];
        dx += din.bottomRows(input_dim_);
        g = din.topRows(prev);
      } else {
        g = din;
      }
    }
    return dx;
  }

  Eigen::Map<const Matrix> weight(std::size_t l) const {
    const Layer& layer = layers_.at(l);
    return Eigen::Map<const Matrix>(params_.data() + layer.w_offset, layer.out, layer.in);
  }
  Eigen::Map<const Vector> bias(std::size_t l) const {
    const Layer& layer = layers_.at(l);
    return Eigen::Map<const Vector>(params_.data() + layer.b_offset, layer.out);
  }

 private:
  struct Layer {
    int in = 0, out = 0;
    int w_offset = 0, b_offset = 0;
  };

  int layer_input_dim(std::size_t l) const {
    if (l == 0) return input_dim_;
    const int prev = hidden_[l - 1];
    return (d2rl_ && l < hidden_.size()) ? prev + input_dim_ : prev;
  }

  Matrix concat_input(const Matrix& h, const Matrix& x, std::size_t l) const {
    if (l == 0) return x;
    if (!d2rl_) return h;
    Matrix in(h.rows() + x.rows(), x.cols());
    in << h, x;
    return in;
  }

  Matrix affine(std::size_t l, const Matrix& in) const {
    Matrix z = weight(l) * in;
    z.colwise() += bias(l);
    return z;
  }

  void check_input(const Matrix& x) const {
    if (x.rows() != input_dim_) throw std::invalid_argument("MLP input has wrong dimension");
  }

  int input_dim_ = 0;
  int output_dim_ = 0;
  std::vector<int> hidden_;
  bool d2rl_ = false;
  std::vector<Layer> layers_;
  Vector params_;
};

}  // namespace lumennav::rl
