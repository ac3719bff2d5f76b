#include "churnlab/runner/experiment.hpp"

#include <cmath>
#include <iostream>

#include "churnlab/agents/sac.hpp"
#include "churnlab/agents/td3.hpp"
#include "churnlab/ntk/probes.hpp"
#include "churnlab/runner/metric_log.hpp"
#include "churnlab/runner/plots.hpp"
#include "churnlab/runner/summary.hpp"

namespace churnlab::runner {

using nlohmann::json;

namespace {

constexpr std::uint64_t kRefStream = 0x72656662;
constexpr std::uint64_t kEvalSeedOffset = 0x9e3779b97f4a7c15ULL;

struct Running {
  double sum = 0.0;
  std::int64_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
};

/// Per-interval aggregation of UpdateDiagnostics.
struct DiagnosticsWindow {
  std::int64_t updates = 0;
  std::int64_t last_update = 0;
  Running td;
  Running value_main, value_churn, value_lambda, value_grad;
  Running policy_main, policy_churn, policy_lambda, policy_grad;
  RatioBand value_band, policy_band;
  Running value_ratio, policy_ratio;

  json to_json() const {
    json j = {{"updates", updates}, {"update_index", last_update}, {"td_mean", td.mean()}};
    if (value_main.n > 0) {
      j["value_loss"] = value_main.mean();
      j["value_churn_loss"] = value_churn.mean();
      j["lambda_q"] = value_lambda.mean();
      j["value_grad_norm"] = value_grad.mean();
      j["value_ratio_updates"] = value_band.updates;
      j["value_ratio_in_band"] = value_band.in_band;
      j["value_ratio_mean"] = value_ratio.n > 0 ? json(value_ratio.mean()) : json(nullptr);
    }
    if (policy_main.n > 0) {
      j["policy_loss"] = policy_main.mean();
      j["policy_churn_loss"] = policy_churn.mean();
      j["lambda_pi"] = policy_lambda.mean();
      j["policy_grad_norm"] = policy_grad.mean();
      j["policy_ratio_updates"] = policy_band.updates;
      j["policy_ratio_in_band"] = policy_band.in_band;
      j["policy_ratio_mean"] = policy_ratio.n > 0 ? json(policy_ratio.mean()) : json(nullptr);
    }
    return j;
  }
};

class RatioTracker {
 public:
  explicit RatioTracker(double beta) : beta_(beta) {}

  void observe(const agents::LossTerms& t, RatioBand& window, RatioBand& total, Running& ratio_mean) {
    const std::optional<double> r = t.realized_ratio();
    if (!r) return;
    if (++seen_ <= kRatioWarmupUpdates) return;
    const bool inside = *r >= 0.5 * beta_ && *r <= 2.0 * beta_;
    ++window.updates;
    ++total.updates;
    window.in_band += inside;
    total.in_band += inside;
    ratio_mean.add(*r);
  }

 private:
  double beta_;
  std::int64_t seen_ = 0;
};

bool finite(const agents::LossTerms& t) {
  return std::isfinite(t.main) && std::isfinite(t.churn) && std::isfinite(t.lambda) && std::isfinite(t.grad_norm);
}

nn::QLayout layout_for(churn::ValueKind kind) {
  return kind == churn::ValueKind::Critic ? nn::QLayout::StateActionToScalar : nn::QLayout::StateToActions;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json probe_payload(const std::string& name, std::optional<double> alpha, std::optional<double> predicted,
                   double measured) {
  std::optional<double> residual;
  if (predicted) residual = measured - *predicted;
  return {{"probe_name", name},
          {"alpha", optional_number(alpha)},
          {"predicted", optional_number(predicted)},
          {"measured", measured},
          {"residual", optional_number(residual)}};
}

}  // namespace

double evaluate_policy(agents::Agent& agent, env::Environment& env, int episodes) {
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    Vector obs = env.reset();
    for (;;) {
      const env::StepResult r = env.step(agent.act_greedy(obs));
      total += r.reward;
      if (r.done) break;
      obs = r.observation;
    }
  }
  return total / static_cast<double>(episodes);
}

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::filesystem::path& run_dir) {
  std::filesystem::create_directories(run_dir);
  MetricLog log(run_dir / "metrics.jsonl", config.condition, seed);

  std::unique_ptr<env::Environment> environment = env::make_environment(config.env, seed);
  std::unique_ptr<env::Environment> eval_env = env::make_environment(config.env, seed ^ kEvalSeedOffset);
  agents::AgentSetup setup;
  setup.env = environment->spec();
  setup.hp = config.hyperparams;
  setup.chain = config.chain;
  setup.network = config.network;
  setup.lr_mode = config.lr_rule;
  setup.seed = seed;
  std::unique_ptr<agents::Agent> agent = agents::make_agent(config.agent, setup);
  const churn::ChurnProbeSpec probe = agent->churn_probe();

  SeedResult result;
  result.condition = config.condition;
  result.seed = seed;
  churn::SnapshotRing ring(config.snapshot_ring.max_lags, config.snapshot_ring.interval);
  Rng ref_rng = make_rng(seed, kRefStream);
  std::int64_t env_step = 0;
  DiagnosticsWindow window;
  RatioTracker value_tracker(config.chain.beta);
  RatioTracker policy_tracker(config.chain.beta);
  std::map<std::string, std::vector<Running>> by_lag;
  std::map<std::string, Running> churn_all;
  Running tr_abs, tr_violation;
  std::map<std::string, Running> update_churn;
  std::optional<churn::AgentSnapshot> pre_update;
  replay::TransitionBatch pre_ref;

  const auto sample_reference = [&](const replay::ReplayBuffer& store) {
    const std::size_t k = std::min<std::size_t>(store.size(), static_cast<std::size_t>(config.reference_batch));
    return replay::to_batch(replay::sample_batch(store, k, ref_rng));
  };

  agent->set_update_hook([&](const agents::UpdateDiagnostics& d) {
    ++window.updates;
    window.last_update = d.update_index;
    window.td.add(d.td_mean);
    if (d.value) {
      window.value_main.add(d.value->main);
      window.value_churn.add(d.value->churn);
      window.value_lambda.add(d.value->lambda);
      window.value_grad.add(d.value->grad_norm);
      value_tracker.observe(*d.value, window.value_band, result.value_ratio, window.value_ratio);
      if (!finite(*d.value)) result.diverged = true;
    }
    if (d.policy) {
      window.policy_main.add(d.policy->main);
      window.policy_churn.add(d.policy->churn);
      window.policy_lambda.add(d.policy->lambda);
      window.policy_grad.add(d.policy->grad_norm);
      policy_tracker.observe(*d.policy, window.policy_band, result.policy_ratio, window.policy_ratio);
      if (!finite(*d.policy)) result.diverged = true;
    }
    if (d.trust_region) {
      tr_abs.add(d.trust_region->mean_abs_ratio_deviation);
      tr_violation.add(d.trust_region->violation_fraction);
      json p = probe_payload("trust_region", std::nullopt, std::nullopt, d.trust_region->mean_abs_ratio_deviation);
      p["violation_fraction"] = d.trust_region->violation_fraction;
      p["states"] = d.trust_region->states;
      p["update_index"] = d.update_index;
      log.write(env_step, "probe", p);
    }

    if (pre_update) {
      const churn::ChurnReport rep = churn::compare_snapshots(agent->churn_snapshot(), *pre_update, probe,
                                                              {pre_ref.states, pre_ref.actions});
      for (const auto& [name, value] : rep.metrics()) {
        log.write(env_step, "update_churn", {{"update_index", d.update_index}, {"metric_name", name}, {"value", value}});
        update_churn[name].add(value);
      }
      pre_update.reset();
    }
    const int every = config.update_churn_every;
    if (every > 0 && (d.update_index + 1) % every == 0 && !agent->replay().empty()) {
      pre_update = agent->churn_snapshot();
      pre_ref = sample_reference(agent->replay());
    }

    if (!ring.due(d.update_index)) return;
    const churn::AgentSnapshot now = agent->churn_snapshot();
    const replay::ReplayBuffer& store = agent->replay();
    if (store.empty()) {
      ring.record(now);
      return;
    }
    const replay::TransitionBatch ref = sample_reference(store);
    const churn::ReferenceBatch ref_batch{ref.states, ref.actions};
    for (const churn::ChurnReport& rep : churn::record_and_report(ring, now, probe, ref_batch)) {
      for (const auto& [name, value] : rep.metrics()) {
        log.write(env_step, "churn",
                  {{"update_index", rep.update_index}, {"lag", rep.lag}, {"metric_name", name}, {"value", value}});
        auto& lags = by_lag[name];
        if (static_cast<int>(lags.size()) < rep.lag) lags.resize(static_cast<std::size_t>(rep.lag));
        lags[static_cast<std::size_t>(rep.lag - 1)].add(value);
        churn_all[name].add(value);
      }
    }
    if (config.kernel_rank && now.value) {
      const Eigen::Index n = std::min<Eigen::Index>(64, ref.states.cols());
      const Matrix actions = probe.value_kind == churn::ValueKind::StateValue ? Matrix(Matrix::Zero(1, n))
                                                                               : Matrix(ref.actions.leftCols(n));
      const double rank =
          ntk::kernel_rank_diagnostic(layout_for(probe.value_kind), *now.value, ref.states.leftCols(n), actions);
      json p = probe_payload("kernel_rank", std::nullopt, std::nullopt, rank);
      p["update_index"] = d.update_index;
      log.write(env_step, "probe", p);
    }
    const std::optional<agents::JointUpdate>* joint = nullptr;
    if (const auto* td3 = dynamic_cast<const agents::Td3Agent*>(agent.get())) joint = &td3->last_joint_update();
    if (const auto* sac = dynamic_cast<const agents::SacAgent*>(agent.get())) joint = &sac->last_joint_update();
    if (joint && joint->has_value() && probe.policy_head) {
      const agents::DualBias bias = agents::dual_bias_probe(*probe.policy_head, **joint, ref.states);
      json p = probe_payload("dual_bias", std::nullopt, std::nullopt, bias.total);
      p["value_term"] = bias.value_term;
      p["policy_term"] = bias.policy_term;
      p["cross"] = bias.cross;
      p["update_index"] = d.update_index;
      log.write(env_step, "probe", p);
    }
  });

  const std::int64_t eval_every = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(static_cast<double>(config.total_steps) * config.eval.every_fraction)));
  const auto evaluate = [&]() {
    const double ret = evaluate_policy(*agent, *eval_env, config.eval.episodes);
    if (!std::isfinite(ret)) result.diverged = true;
    result.eval_curve.emplace_back(env_step, ret);
    log.write(env_step, "return", {{"value", ret}, {"episodes", config.eval.episodes}, {"update_index", agent->update_count()}});
  };

  Vector obs = environment->reset();
  for (env_step = 1; env_step <= config.total_steps; ++env_step) {
    const Vector action = agent->act(obs);
    const env::StepResult r = environment->step(action);
    agent->observe({obs, action, r.reward, r.observation, r.terminal}, r.done);
    obs = r.done ? environment->reset() : r.observation;

    if (env_step % config.metric_interval == 0 || env_step == config.total_steps) {
      if (window.updates > 0) log.write(env_step, "diagnostics", window.to_json());
      window = {};
    }
    if (env_step % eval_every == 0 || env_step == config.total_steps) evaluate();
    if (env_step % config.metric_interval == 0) log.flush();
  }
  env_step = config.total_steps;
  log.flush();

  result.final_return = result.eval_curve.empty() ? 0.0 : result.eval_curve.back().second;
  result.updates = agent->update_count();
  for (const auto& [name, lags] : by_lag) {
    std::vector<double> means;
    for (const Running& r : lags) means.push_back(r.mean());
    result.churn_by_lag[name] = std::move(means);
  }
  for (const auto& [name, r] : churn_all) result.churn_average[name] = r.mean();
  for (const auto& [name, r] : update_churn) result.update_churn_average[name] = r.mean();
  if (tr_abs.n > 0) {
    result.trust_region_mean_abs = tr_abs.mean();
    result.trust_region_violation = tr_violation.mean();
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::optional<std::uint64_t> seed_override,
                                std::optional<std::filesystem::path> output_override) {
  ExperimentConfig base = config;
  if (seed_override) base.seeds = {*seed_override};
  if (output_override) base.output_dir = *output_override;
  base.validate();
  const std::vector<ExperimentConfig> conditions = expand_sweep(base);
  for (const ExperimentConfig& c : conditions) c.validate();

  ExperimentResult result;
  result.output_dir = resolve_output_dir(base);
  std::vector<std::filesystem::path> run_dirs;
  for (const ExperimentConfig& c : conditions) {
    const std::filesystem::path cond_dir = result.output_dir / c.condition;
    std::filesystem::create_directories(cond_dir);
    std::ofstream(cond_dir / "config.json") << to_json(c).dump(2) << '\n';
    for (std::uint64_t seed : c.seeds) {
      const std::filesystem::path run_dir = cond_dir / ("seed_" + std::to_string(seed));
      result.runs.push_back(run_seed(c, seed, run_dir));
      run_dirs.push_back(run_dir);
    }
  }
  write_summary_csv(summarize(run_dirs), result.output_dir / "summary.csv");
  emit_plots(run_dirs, result.output_dir / "plots", std::cerr);
  return result;
}

}  // namespace churnlab::runner
