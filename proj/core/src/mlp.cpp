#include "rebot/mlp.hpp"

#include "rebot/errors.hpp"

namespace rebot {

namespace {

// ELU applied in place. The derivative is recovered from the post-activation
// value (y > 0 ? 1 : y + 1), so the cache only needs activations.
void elu_inplace(Eigen::MatrixXd& m) {
  m = m.unaryExpr([](double x) { return x > 0.0 ? x : std::exp(x) - 1.0; });
}

Eigen::MatrixXd orthogonal_matrix(int rows, int cols, Rng& rng) {
  const bool tall = rows >= cols;
  const int r = tall ? rows : cols;
  const int c = tall ? cols : rows;
  Eigen::MatrixXd a(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) a(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(r, c);
  const Eigen::MatrixXd rfac = qr.matrixQR().topRows(c).triangularView<Eigen::Upper>();
  for (int j = 0; j < c; ++j) {
    if (rfac(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return tall ? q : Eigen::MatrixXd(q.transpose());
}

}  // namespace

Mlp Mlp::zeros(const std::vector<int>& dims) {
  if (dims.size() < 2) throw InvalidInput("Mlp: need at least input and output dims");
  Mlp net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    net.weights.emplace_back(Eigen::MatrixXd::Zero(dims[l + 1], dims[l]));
    net.biases.emplace_back(Eigen::VectorXd::Zero(dims[l + 1]));
  }
  return net;
}

Mlp Mlp::orthogonal(const std::vector<int>& dims, double hidden_gain, double out_gain, Rng& rng) {
  Mlp net = zeros(dims);
  for (int l = 0; l < net.num_layers(); ++l) {
    const double gain = (l + 1 == net.num_layers()) ? out_gain : hidden_gain;
    net.weights[l] =
        gain * orthogonal_matrix(static_cast<int>(net.weights[l].rows()),
                                 static_cast<int>(net.weights[l].cols()), rng);
  }
  return net;
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& input, Cache* cache) const {
  if (input.rows() != input_dim()) throw InvalidInput("Mlp::forward: input dimension mismatch");
  if (cache) {
    cache->layer_inputs.clear();
    cache->layer_inputs.reserve(weights.size());
  }
  Eigen::MatrixXd a = input;
  for (int l = 0; l < num_layers(); ++l) {
    if (cache) cache->layer_inputs.push_back(a);
    Eigen::MatrixXd z = (weights[l] * a).colwise() + biases[l];
    if (l + 1 < num_layers()) elu_inplace(z);
    a = std::move(z);
  }
  return a;
}

Eigen::VectorXd Mlp::forward1(const Eigen::VectorXd& input) const {
  return forward(Eigen::MatrixXd(input));
}

Mlp::Grads Mlp::Grads::zeros_like(const Mlp& net) {
  Grads g;
  for (int l = 0; l < net.num_layers(); ++l) {
    g.d_weights.emplace_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
    g.d_biases.emplace_back(Eigen::VectorXd::Zero(net.biases[l].size()));
  }
  return g;
}

void Mlp::Grads::set_zero() {
  for (auto& m : d_weights) m.setZero();
  for (auto& v : d_biases) v.setZero();
}

Eigen::MatrixXd Mlp::backward(const Cache& cache, const Eigen::MatrixXd& d_output,
                              Grads& grads) const {
  if (cache.layer_inputs.size() != weights.size()) {
    throw InvalidInput("Mlp::backward: cache does not match network");
  }
  Eigen::MatrixXd dz = d_output;
  for (int l = num_layers() - 1; l >= 0; --l) {
    grads.d_weights[l].noalias() += dz * cache.layer_inputs[l].transpose();
    grads.d_biases[l].noalias() += dz.rowwise().sum();
    if (l == 0) {
      return weights[l].transpose() * dz;
    }
    Eigen::MatrixXd dx = weights[l].transpose() * dz;
    // cache.layer_inputs[l] holds the post-ELU activations feeding layer l.
    dz = dx.cwiseProduct(cache.layer_inputs[l].unaryExpr(
        [](double y) { return y > 0.0 ? 1.0 : y + 1.0; }));
  }
  return dz;  // unreachable
}

}  // namespace rebot
