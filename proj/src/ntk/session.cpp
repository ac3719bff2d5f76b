#include "churnlab/ntk/session.hpp"

namespace churnlab::ntk {

namespace {

nn::MlpSpec tiny(int input, int output) {
  nn::MlpSpec spec;
  spec.input_dim = input;
  spec.output_dim = output;
  spec.base_width = kProbeWidth;
  spec.base_depth = 2;
  return spec;
}

Vector uniform_point(Rng& rng, int dim) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = u(rng);
  return v;
}

}  // namespace

nn::Mlp probe_critic(std::uint64_t seed) { return nn::build_mlp(tiny(kProbeStateDim + kProbeActionDim, 1), seed); }

nn::Mlp probe_actor(std::uint64_t seed) {
  return nn::build_mlp(nn::policy_mlp_spec(nn::PolicyHead::Tanh, kProbeStateDim, kProbeActionDim, tiny(1, 1)), seed);
}

bool is_known_probe(const std::string& name) { return name == "value_churn" || name == "policy_value_deviation"; }

std::vector<ProbeRecord> run_probe_session(const std::string& name, double alpha, std::uint64_t seed, int points) {
  if (!is_known_probe(name)) throw ConfigError("probe: unknown probe '" + name + "'");
  if (points <= 0) throw ConfigError("probe: points must be positive");
  Rng rng = make_rng(seed, 0x6e746b);
  std::normal_distribution<double> normal;
  std::vector<ProbeRecord> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const std::uint64_t net_seed = rng();
    ProbeRecord rec{name, alpha, {}};
    if (name == "value_churn") {
      const nn::Mlp critic = probe_critic(net_seed);
      const Vector s = uniform_point(rng, kProbeStateDim), a = uniform_point(rng, kProbeActionDim);
      const Vector rs = uniform_point(rng, kProbeStateDim), ra = uniform_point(rng, kProbeActionDim);
      rec.estimate = predict_value_churn(nn::QLayout::StateActionToScalar, critic, s, a, rs, ra, alpha, normal(rng));
    } else {
      const nn::Mlp critic = probe_critic(net_seed);
      const nn::Mlp actor = probe_actor(net_seed ^ 0x5a5a5a5a);
      const Vector s = uniform_point(rng, kProbeStateDim), rs = uniform_point(rng, kProbeStateDim);
      rec.estimate = predict_policy_value_deviation(critic, actor, s, rs, alpha);
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace churnlab::ntk
