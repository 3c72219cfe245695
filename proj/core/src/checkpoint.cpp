#include "rebot/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "rebot/errors.hpp"

namespace rebot {

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'B', 'O', 'T'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw CheckpointError(CheckpointError::Code::kDimensionMismatch, "checkpoint truncated");
  return value;
}

void write_tensor(std::ofstream& out, const double* data, std::size_t n) {
  std::vector<float> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(data[i]);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(n * sizeof(float)));
}

void read_tensor(std::ifstream& in, double* data, std::size_t n) {
  std::vector<float> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n * sizeof(float)));
  if (!in) throw CheckpointError(CheckpointError::Code::kDimensionMismatch, "checkpoint truncated");
  for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<double>(buf[i]);
}

// Weight matrices are stored row-major; Eigen is column-major, so stage
// through a transposed copy.
void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  write_tensor(out, rm.data(), static_cast<std::size_t>(rm.size()));
}

void read_matrix(std::ifstream& in, Eigen::MatrixXd& m) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(m.rows(), m.cols());
  read_tensor(in, rm.data(), static_cast<std::size_t>(rm.size()));
  m = rm;
}

std::size_t expected_payload_floats(int obs_dim, int action_dim,
                                    const std::vector<int>& hidden) {
  std::size_t n = 0;
  auto mlp_floats = [&](int out_dim) {
    int in_dim = obs_dim;
    for (int h : hidden) {
      n += static_cast<std::size_t>(h) * in_dim + h;
      in_dim = h;
    }
    n += static_cast<std::size_t>(out_dim) * in_dim + out_dim;
  };
  mlp_floats(action_dim);
  mlp_floats(1);
  n += static_cast<std::size_t>(action_dim);  // log_std
  n += 2 * static_cast<std::size_t>(obs_dim);  // normalizer mean + var
  return n;
}

}  // namespace

void checkpoint_save(const PolicyParams& params, PolicyKind kind,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError(CheckpointError::Code::kIo, "cannot write " + path.string());

  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint8_t>(kind == PolicyKind::kAvoidance ? 0 : 1));
  write_pod(out, static_cast<std::uint32_t>(params.obs_dim()));
  write_pod(out, static_cast<std::uint32_t>(params.action_dim()));

  const int hidden_count = params.actor.num_layers() - 1;
  write_pod(out, static_cast<std::uint32_t>(hidden_count));
  for (int l = 0; l < hidden_count; ++l) {
    write_pod(out, static_cast<std::uint32_t>(params.actor.weights[l].rows()));
  }
  write_pod(out, static_cast<std::uint64_t>(params.update_count));
  write_pod(out, static_cast<std::uint64_t>(params.obs_norm.count));

  for (int l = 0; l < params.actor.num_layers(); ++l) {
    write_matrix(out, params.actor.weights[l]);
    write_tensor(out, params.actor.biases[l].data(),
                 static_cast<std::size_t>(params.actor.biases[l].size()));
  }
  for (int l = 0; l < params.critic.num_layers(); ++l) {
    write_matrix(out, params.critic.weights[l]);
    write_tensor(out, params.critic.biases[l].data(),
                 static_cast<std::size_t>(params.critic.biases[l].size()));
  }
  write_tensor(out, params.log_std.data(), static_cast<std::size_t>(params.log_std.size()));
  write_tensor(out, params.obs_norm.mean.data(),
               static_cast<std::size_t>(params.obs_norm.mean.size()));
  write_tensor(out, params.obs_norm.var.data(),
               static_cast<std::size_t>(params.obs_norm.var.size()));
  if (!out) throw CheckpointError(CheckpointError::Code::kIo, "write failed: " + path.string());
}

std::pair<PolicyParams, PolicyKind> checkpoint_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointError::Code::kIo, "cannot read " + path.string());

  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw CheckpointError(CheckpointError::Code::kBadMagic, "not a policy checkpoint");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw CheckpointError(CheckpointError::Code::kBadVersion,
                          "unsupported checkpoint version " + std::to_string(version));
  }
  const auto kind_byte = read_pod<std::uint8_t>(in);
  if (kind_byte > 1) {
    throw CheckpointError(CheckpointError::Code::kDimensionMismatch, "bad policy kind byte");
  }
  const auto obs_dim = static_cast<int>(read_pod<std::uint32_t>(in));
  const auto action_dim = static_cast<int>(read_pod<std::uint32_t>(in));
  const auto hidden_count = read_pod<std::uint32_t>(in);
  if (obs_dim <= 0 || action_dim <= 0 || hidden_count > 64) {
    throw CheckpointError(CheckpointError::Code::kDimensionMismatch, "implausible dimensions");
  }
  std::vector<int> hidden(hidden_count);
  for (auto& h : hidden) {
    h = static_cast<int>(read_pod<std::uint32_t>(in));
    if (h <= 0) throw CheckpointError(CheckpointError::Code::kDimensionMismatch, "bad hidden dim");
  }
  const auto update_count = read_pod<std::uint64_t>(in);
  const auto norm_count = read_pod<std::uint64_t>(in);

  // The remaining payload must be exactly the implied tensor bytes.
  const auto payload_start = in.tellg();
  in.seekg(0, std::ios::end);
  const auto file_end = in.tellg();
  in.seekg(payload_start);
  const std::size_t expected =
      expected_payload_floats(obs_dim, action_dim, hidden) * sizeof(float);
  if (static_cast<std::size_t>(file_end - payload_start) != expected) {
    throw CheckpointError(CheckpointError::Code::kDimensionMismatch,
                          "payload size does not match header dimensions");
  }

  std::vector<int> actor_dims{obs_dim};
  actor_dims.insert(actor_dims.end(), hidden.begin(), hidden.end());
  actor_dims.push_back(action_dim);
  std::vector<int> critic_dims{obs_dim};
  critic_dims.insert(critic_dims.end(), hidden.begin(), hidden.end());
  critic_dims.push_back(1);

  PolicyParams params;
  params.actor = Mlp::zeros(actor_dims);
  params.critic = Mlp::zeros(critic_dims);
  params.log_std = VectorXd::Zero(action_dim);
  params.obs_norm = RunningNorm(obs_dim);
  params.update_count = update_count;
  params.obs_norm.count = static_cast<double>(norm_count);

  for (int l = 0; l < params.actor.num_layers(); ++l) {
    read_matrix(in, params.actor.weights[l]);
    read_tensor(in, params.actor.biases[l].data(),
                static_cast<std::size_t>(params.actor.biases[l].size()));
  }
  for (int l = 0; l < params.critic.num_layers(); ++l) {
    read_matrix(in, params.critic.weights[l]);
    read_tensor(in, params.critic.biases[l].data(),
                static_cast<std::size_t>(params.critic.biases[l].size()));
  }
  read_tensor(in, params.log_std.data(), static_cast<std::size_t>(params.log_std.size()));
  read_tensor(in, params.obs_norm.mean.data(),
              static_cast<std::size_t>(params.obs_norm.mean.size()));
  read_tensor(in, params.obs_norm.var.data(),
              static_cast<std::size_t>(params.obs_norm.var.size()));
  params.obs_norm.var = params.obs_norm.var.cwiseMax(1e-12);

  return {std::move(params), kind_byte == 0 ? PolicyKind::kAvoidance : PolicyKind::kRecovery};
}

}  // namespace rebot
