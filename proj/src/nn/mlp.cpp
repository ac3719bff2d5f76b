#include "churnlab/nn/mlp.hpp"

#include <cmath>

namespace churnlab::nn {

int MlpSpec::hidden_width() const {
  return scale_mode == ScaleMode::Widen ? base_width * scale_up_ratio : base_width;
}

int MlpSpec::hidden_depth() const {
  return scale_mode == ScaleMode::Deepen ? base_depth * scale_up_ratio : base_depth;
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1) throw ConfigError("mlp: input/output dims must be positive");
  if (base_width < 1 || base_depth < 1) throw ConfigError("mlp: base width/depth must be positive");
  if (extra_params < 0) throw ConfigError("mlp: extra_params must be non-negative");
  switch (scale_up_ratio) {
    case 1: case 2: case 4: case 8: case 16: break;
    default:
      throw ConfigError("mlp: scale_up_ratio must be one of {1,2,4,8,16}, got " +
                        std::to_string(scale_up_ratio));
  }
}

MlpArchitecture::MlpArchitecture(const MlpSpec& spec) {
  spec.validate();
  sizes_.push_back(spec.input_dim);
  for (int i = 0; i < spec.hidden_depth(); ++i) sizes_.push_back(spec.hidden_width());
  sizes_.push_back(spec.output_dim);
  for (int l = 0; l + 1 < static_cast<int>(sizes_.size()); ++l) {
    offsets_.push_back(network_params_);
    network_params_ += static_cast<Eigen::Index>(sizes_[l]) * sizes_[l + 1] + sizes_[l + 1];
  }
  extra_ = spec.extra_params;
}

namespace {

using ConstMatMap = Eigen::Map<const Matrix>;
using ConstVecMap = Eigen::Map<const Vector>;

struct LayerView {
  ConstMatMap w;
  ConstVecMap b;
};

LayerView layer(const MlpArchitecture& arch, const Vector& params, int l) {
  const int in = arch.layer_sizes()[l];
  const int out = arch.layer_sizes()[l + 1];
  const double* base = params.data() + arch.weight_offset(l);
  return LayerView{ConstMatMap(base, out, in), ConstVecMap(base + static_cast<Eigen::Index>(out) * in, out)};
}

}  // namespace

Matrix forward(const MlpArchitecture& arch, const Vector& params, const Matrix& inputs,
               ForwardTrace* trace) {
  require(params.size() == arch.parameter_count(), "mlp: parameter vector size mismatch");
  require(inputs.rows() == arch.input_dim(), "mlp: input dimension mismatch");
  if (trace) {
    trace->inputs.clear();
    trace->inputs.reserve(arch.layer_count());
  }
  Matrix x = inputs;
  for (int l = 0; l < arch.layer_count(); ++l) {
    const LayerView lv = layer(arch, params, l);
    Matrix z = lv.w * x;
    z.colwise() += lv.b;
    if (l + 1 < arch.layer_count()) z = z.cwiseMax(0.0);
    if (trace) trace->inputs.push_back(std::move(x));
    x = std::move(z);
  }
  return x;
}

Vector backward(const MlpArchitecture& arch, const Vector& params, const ForwardTrace& trace,
                const Matrix& output_grad, Matrix* input_grad) {
  require(static_cast<int>(trace.inputs.size()) == arch.layer_count(), "mlp: trace does not match network");
  require(output_grad.rows() == arch.output_dim() && output_grad.cols() == trace.inputs.front().cols(),
          "mlp: output gradient shape mismatch");
  Vector grad = Vector::Zero(arch.parameter_count());
  Matrix g = output_grad;
  for (int l = arch.layer_count() - 1; l >= 0; --l) {
    const LayerView lv = layer(arch, params, l);
    const Matrix& x = trace.inputs[l];
    const int in = arch.layer_sizes()[l];
    const int out = arch.layer_sizes()[l + 1];
    double* base = grad.data() + arch.weight_offset(l);
    Eigen::Map<Matrix>(base, out, in).noalias() = g * x.transpose();
    Eigen::Map<Vector>(base + static_cast<Eigen::Index>(out) * in, out) = g.rowwise().sum();
    if (l > 0) {
      Matrix upstream = lv.w.transpose() * g;
      g = (x.array() > 0.0).select(upstream, 0.0);
    } else if (input_grad) {
      *input_grad = lv.w.transpose() * g;
    }
  }
  return grad;
}

ParameterSnapshot::ParameterSnapshot(std::shared_ptr<const MlpArchitecture> arch, Vector params,
                                     std::int64_t update_index)
    : arch_(std::move(arch)),
      params_(std::make_shared<const Vector>(std::move(params))),
      update_index_(update_index) {
  require(arch_ != nullptr, "snapshot: missing architecture");
  require(params_->size() == arch_->parameter_count(), "snapshot: parameter vector size mismatch");
}

Matrix ParameterSnapshot::forward(const Matrix& inputs) const {
  return nn::forward(*arch_, *params_, inputs);
}

Mlp::Mlp(std::shared_ptr<const MlpArchitecture> arch, Vector params, std::int64_t update_index)
    : arch_(std::move(arch)), params_(std::move(params)), update_index_(update_index) {
  require(arch_ != nullptr, "mlp: missing architecture");
  require(params_.size() == arch_->parameter_count(), "mlp: parameter vector size mismatch");
}

Matrix Mlp::forward(const Matrix& inputs, ForwardTrace* trace) const {
  return nn::forward(*arch_, params_, inputs, trace);
}

Vector Mlp::backward(const ForwardTrace& trace, const Matrix& output_grad, Matrix* input_grad) const {
  return nn::backward(*arch_, params_, trace, output_grad, input_grad);
}

ParameterSnapshot Mlp::snapshot() const { return ParameterSnapshot(arch_, params_, update_index_); }

void Mlp::load(const ParameterSnapshot& snapshot) {
  require(snapshot.architecture() == *arch_, "mlp: cannot load snapshot of a different architecture");
  params_ = snapshot.parameters();
}

Mlp build_mlp(const MlpSpec& spec, std::uint64_t seed) {
  auto arch = std::make_shared<const MlpArchitecture>(spec);
  Rng rng = make_rng(seed, 0x6d6c70);
  Vector params = Vector::Zero(arch->parameter_count());
  for (int l = 0; l < arch->layer_count(); ++l) {
    const int in = arch->layer_sizes()[l];
    const int out = arch->layer_sizes()[l + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const Eigen::Index begin = arch->weight_offset(l);
    const Eigen::Index count = static_cast<Eigen::Index>(out) * in + out;
    for (Eigen::Index i = 0; i < count; ++i) params[begin + i] = dist(rng);
  }
  return Mlp(std::move(arch), std::move(params));
}

double effective_learning_rate(const LearningRateRule& rule, int scale_up_ratio) {
  require(scale_up_ratio >= 1, "effective_learning_rate: ratio must be >= 1");
  require(rule.base_lr > 0.0, "effective_learning_rate: base lr must be positive");
  switch (rule.mode) {
    case LrMode::Direct: return rule.base_lr;
    case LrMode::Sqrt: return rule.base_lr / std::sqrt(static_cast<double>(scale_up_ratio));
    case LrMode::Linear: return rule.base_lr / static_cast<double>(scale_up_ratio);
  }
  return rule.base_lr;
}

Matrix stack_rows(const Matrix& top, const Matrix& bottom) {
  require(top.cols() == bottom.cols(), "stack_rows: column count mismatch");
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

}  // namespace churnlab::nn
