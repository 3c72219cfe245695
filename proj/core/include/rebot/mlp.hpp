#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rebot/rng.hpp"

namespace rebot {

/// Dense multilayer perceptron with ELU hidden activations and a linear
/// output layer. Forward and backward passes are hand-written for this fixed
/// topology; batches are column-major (one sample per column) so layers are
/// plain GEMMs.
struct Mlp {
  std::vector<Eigen::MatrixXd> weights;  // weights[l]: dims[l+1] x dims[l]
  std::vector<Eigen::VectorXd> biases;

  static Mlp zeros(const std::vector<int>& dims);

  /// Orthogonal initialization; `out_gain` scales the final layer.
  static Mlp orthogonal(const std::vector<int>& dims, double hidden_gain, double out_gain,
                        Rng& rng);

  int num_layers() const { return static_cast<int>(weights.size()); }
  int input_dim() const { return static_cast<int>(weights.front().cols()); }
  int output_dim() const { return static_cast<int>(weights.back().rows()); }

  /// Post-activation inputs of every layer, kept for the backward pass.
  /// layer_inputs[l] feeds weights[l]; layer_inputs[0] is the network input.
  struct Cache {
    std::vector<Eigen::MatrixXd> layer_inputs;
  };

  Eigen::MatrixXd forward(const Eigen::MatrixXd& input, Cache* cache = nullptr) const;
  Eigen::VectorXd forward1(const Eigen::VectorXd& input) const;

  struct Grads {
    std::vector<Eigen::MatrixXd> d_weights;
    std::vector<Eigen::VectorXd> d_biases;

    static Grads zeros_like(const Mlp& net);
    void set_zero();
  };

  /// Backpropagates d_output (gradient w.r.t. the network output, same shape
  /// as the forward result) through the cached activations, accumulating into
  /// `grads`. Returns the gradient w.r.t. the network input.
  Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& d_output,
                           Grads& grads) const;
};

inline double elu(double x) { return x > 0.0 ? x : std::exp(x) - 1.0; }

}  // namespace rebot
