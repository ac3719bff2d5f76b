#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "churnlab/common.hpp"

namespace churnlab::nn {

enum class ScaleMode { Widen, Deepen };

/// Shape of a rectifier MLP. Scaling touches hidden layers only; the output
/// layer always maps to output_dim.
struct MlpSpec {
  int input_dim = 1;
  int output_dim = 1;
  int base_width = 256;
  int base_depth = 2;
  int scale_up_ratio = 1;
  ScaleMode scale_mode = ScaleMode::Widen;
  // Free parameters appended after the network weights (e.g. a state-independent
  // log standard deviation). They are initialized to zero and unused by forward().
  int extra_params = 0;

  int hidden_width() const;
  int hidden_depth() const;
  /// Throws ConfigError for a ratio outside {1, 2, 4, 8, 16} or non-positive sizes.
  void validate() const;
};

/// Flat parameter layout: for each layer, W (out x in, column-major) then b (out),
/// followed by extra_params free parameters.
class MlpArchitecture {
 public:
  explicit MlpArchitecture(const MlpSpec& spec);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  int layer_count() const { return static_cast<int>(sizes_.size()) - 1; }
  Eigen::Index network_parameter_count() const { return network_params_; }
  Eigen::Index extra_parameter_count() const { return extra_; }
  Eigen::Index parameter_count() const { return network_params_ + extra_; }
  Eigen::Index weight_offset(int layer) const { return offsets_[layer]; }

  friend bool operator==(const MlpArchitecture& a, const MlpArchitecture& b) {
    return a.sizes_ == b.sizes_ && a.extra_ == b.extra_;
  }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index network_params_ = 0;
  Eigen::Index extra_ = 0;
};

/// Layer inputs recorded by a forward pass; inputs[0] is the network input and
/// inputs[l] the post-activation output of hidden layer l.
struct ForwardTrace {
  std::vector<Matrix> inputs;
};

/// Batched forward pass; columns of `inputs` are samples.
Matrix forward(const MlpArchitecture& arch, const Vector& params, const Matrix& inputs,
               ForwardTrace* trace = nullptr);

/// Reverse pass for dL/d(outputs) = output_grad. Returns dL/d(params) (extra
/// parameters receive zero); optionally writes dL/d(inputs).
Vector backward(const MlpArchitecture& arch, const Vector& params, const ForwardTrace& trace,
                const Matrix& output_grad, Matrix* input_grad = nullptr);

/// Immutable copy of a network's parameters tagged with its update index.
/// Copies share storage, so handing a snapshot to another thread is cheap.
class ParameterSnapshot {
 public:
  ParameterSnapshot(std::shared_ptr<const MlpArchitecture> arch, Vector params,
                    std::int64_t update_index);

  const MlpArchitecture& architecture() const { return *arch_; }
  const std::shared_ptr<const MlpArchitecture>& architecture_ptr() const { return arch_; }
  const Vector& parameters() const { return *params_; }
  std::int64_t update_index() const { return update_index_; }

  Matrix forward(const Matrix& inputs) const;

 private:
  std::shared_ptr<const MlpArchitecture> arch_;
  std::shared_ptr<const Vector> params_;
  std::int64_t update_index_ = 0;
};

class Mlp {
 public:
  Mlp(std::shared_ptr<const MlpArchitecture> arch, Vector params, std::int64_t update_index = 0);

  const MlpArchitecture& architecture() const { return *arch_; }
  const std::shared_ptr<const MlpArchitecture>& architecture_ptr() const { return arch_; }
  const Vector& parameters() const { return params_; }
  Vector& mutable_parameters() { return params_; }
  std::int64_t update_index() const { return update_index_; }
  void count_update() { ++update_index_; }

  Matrix forward(const Matrix& inputs, ForwardTrace* trace = nullptr) const;
  Vector backward(const ForwardTrace& trace, const Matrix& output_grad,
                  Matrix* input_grad = nullptr) const;

  ParameterSnapshot snapshot() const;
  /// Overwrites parameters with a snapshot of the same architecture (hard sync).
  void load(const ParameterSnapshot& snapshot);

 private:
  std::shared_ptr<const MlpArchitecture> arch_;
  Vector params_;
  std::int64_t update_index_ = 0;
};

/// Fan-in scaled uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)),
/// fully determined by the seed.
Mlp build_mlp(const MlpSpec& spec, std::uint64_t seed);

/// Non-owning (architecture, parameters) pair so code can accept either a live
/// network or a snapshot.
struct NetView {
  const MlpArchitecture& arch;
  const Vector& params;

  NetView(const MlpArchitecture& a, const Vector& p) : arch(a), params(p) {}
  NetView(const Mlp& net) : arch(net.architecture()), params(net.parameters()) {}  // NOLINT
  NetView(const ParameterSnapshot& s) : arch(s.architecture()), params(s.parameters()) {}  // NOLINT

  Matrix forward(const Matrix& inputs, ForwardTrace* trace = nullptr) const {
    return nn::forward(arch, params, inputs, trace);
  }
};

enum class LrMode { Direct, Sqrt, Linear };

struct LearningRateRule {
  double base_lr = 3e-4;
  LrMode mode = LrMode::Sqrt;
};

double effective_learning_rate(const LearningRateRule& rule, int scale_up_ratio);

/// Row-stacks two sample matrices (e.g. states over actions for a critic input).
Matrix stack_rows(const Matrix& top, const Matrix& bottom);

}  // namespace churnlab::nn
