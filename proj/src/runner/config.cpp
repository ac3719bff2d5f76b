#include "churnlab/runner/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "churnlab/env/environment.hpp"

namespace churnlab::runner {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.contains(key)) throw ConfigError(where + key + ": unknown field");
}

template <typename T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + key + ": " + e.what());
  }
}

const json& object_at(const json& doc, const char* key, const std::string& where) {
  const json& v = doc.at(key);
  if (!v.is_object()) throw ConfigError(where + key + ": expected an object");
  return v;
}

void read_hyperparams(const json& h, agents::AgentHyperparams& hp) {
  const std::string w = "hyperparams.";
  reject_unknown(h, w,
                 {"gamma", "lr_actor", "lr_critic", "lr", "batch_size", "reg_batch_size", "buffer_capacity",
                  "train_interval", "initial_random_steps", "schedule_scale", "target_sync_interval",
                  "epsilon_initial", "epsilon_final", "epsilon_decay_steps", "rollout_length", "minibatches",
                  "update_epochs", "clip_epsilon", "gae_lambda", "value_coef", "max_grad_norm", "adam_eps",
                  "probe_batch_size", "tau", "actor_interval", "exploration_noise", "target_noise",
                  "target_noise_clip", "entropy_alpha"});
  if (h.contains("lr")) {
    read(h, "lr", w, hp.lr_actor);
    hp.lr_critic = hp.lr_actor;
  }
  read(h, "gamma", w, hp.gamma);
  read(h, "lr_actor", w, hp.lr_actor);
  read(h, "lr_critic", w, hp.lr_critic);
  read(h, "batch_size", w, hp.batch_size);
  read(h, "reg_batch_size", w, hp.reg_batch_size);
  read(h, "buffer_capacity", w, hp.buffer_capacity);
  read(h, "train_interval", w, hp.train_interval);
  read(h, "initial_random_steps", w, hp.initial_random_steps);
  read(h, "schedule_scale", w, hp.schedule_scale);
  read(h, "target_sync_interval", w, hp.target_sync_interval);
  read(h, "epsilon_initial", w, hp.epsilon_initial);
  read(h, "epsilon_final", w, hp.epsilon_final);
  read(h, "epsilon_decay_steps", w, hp.epsilon_decay_steps);
  read(h, "rollout_length", w, hp.rollout_length);
  read(h, "minibatches", w, hp.minibatches);
  read(h, "update_epochs", w, hp.update_epochs);
  read(h, "clip_epsilon", w, hp.clip_epsilon);
  read(h, "gae_lambda", w, hp.gae_lambda);
  read(h, "value_coef", w, hp.value_coef);
  read(h, "max_grad_norm", w, hp.max_grad_norm);
  read(h, "adam_eps", w, hp.adam_eps);
  read(h, "probe_batch_size", w, hp.probe_batch_size);
  read(h, "tau", w, hp.tau);
  read(h, "actor_interval", w, hp.actor_interval);
  read(h, "exploration_noise", w, hp.exploration_noise);
  read(h, "target_noise", w, hp.target_noise);
  read(h, "target_noise_clip", w, hp.target_noise_clip);
  read(h, "entropy_alpha", w, hp.entropy_alpha);
}

std::string format_value(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

}  // namespace

nn::LrMode parse_lr_mode(const std::string& name) {
  if (name == "direct") return nn::LrMode::Direct;
  if (name == "sqrt") return nn::LrMode::Sqrt;
  if (name == "linear") return nn::LrMode::Linear;
  throw ConfigError("network.lr_rule: unknown rule '" + name + "' (expected direct|sqrt|linear)");
}

std::string to_string(nn::LrMode mode) {
  switch (mode) {
    case nn::LrMode::Direct: return "direct";
    case nn::LrMode::Sqrt: return "sqrt";
    case nn::LrMode::Linear: return "linear";
  }
  return "sqrt";
}

void ExperimentConfig::validate() const {
  if (!agents::is_known_agent(agent))
    throw ConfigError("agent: unknown agent '" + agent + "' (expected ddqn|ppo|td3|sac)");
  if (!env::is_known_environment(env))
    throw ConfigError("env: unknown environment '" + env + "' (expected gridnav|pointmass)");
  const bool discrete_agent = agent == "ddqn";
  const bool discrete_env = env == "gridnav";
  if (discrete_agent != discrete_env)
    throw ConfigError("env: agent '" + agent + "' cannot act in environment '" + env + "'");
  if (total_steps < 1) throw ConfigError("total_steps: must be >= 1");
  if (metric_interval < 1) throw ConfigError("metric_interval: must be >= 1");
  if (snapshot_ring.max_lags < 1) throw ConfigError("snapshot_ring.max_lags: must be >= 1");
  if (snapshot_ring.interval < 1) throw ConfigError("snapshot_ring.interval: must be >= 1");
  if (reference_batch < 1) throw ConfigError("reference_batch: must be >= 1");
  if (update_churn_every < 0) throw ConfigError("update_churn_every: must be >= 0");
  if (eval.episodes < 1) throw ConfigError("eval.episodes: must be >= 1");
  if (!(eval.every_fraction > 0.0 && eval.every_fraction <= 1.0))
    throw ConfigError("eval.every_fraction: must be in (0, 1]");
  if (seeds.empty()) throw ConfigError("seeds: must list at least one seed");
  if (output_dir.empty()) throw ConfigError("output_dir: missing output path");
  for (double v : sweep.lr)
    if (v <= 0.0) throw ConfigError("sweep.lr: values must be positive");
  for (double v : sweep.tau)
    if (!(v > 0.0 && v <= 1.0)) throw ConfigError("sweep.tau: values must be in (0, 1]");
  hyperparams.validate();
  chain.validate();
  network.validate();
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config: expected a JSON object");
  reject_unknown(doc, "",
                 {"agent", "env", "condition", "hyperparams", "chain", "network", "total_steps", "metric_interval",
                  "snapshot_ring", "reference_batch", "update_churn_every", "kernel_rank", "eval", "seeds", "output_dir", "sweep"});
  ExperimentConfig c;
  if (!doc.contains("agent")) throw ConfigError("agent: missing field");
  if (!doc.contains("env")) throw ConfigError("env: missing field");
  read(doc, "agent", "", c.agent);
  read(doc, "env", "", c.env);
  if (!agents::is_known_agent(c.agent))
    throw ConfigError("agent: unknown agent '" + c.agent + "' (expected ddqn|ppo|td3|sac)");
  c.hyperparams = agents::default_hyperparams(c.agent);
  if (doc.contains("hyperparams")) read_hyperparams(object_at(doc, "hyperparams", ""), c.hyperparams);

  if (doc.contains("chain")) {
    const json& ch = object_at(doc, "chain", "");
    reject_unknown(ch, "chain.", {"mode", "lambda_q", "lambda_pi", "auto", "beta", "running_decay"});
    std::string mode = "none";
    read(ch, "mode", "chain.", mode);
    c.chain.mode = chain::parse_chain_mode(mode);
    read(ch, "lambda_q", "chain.", c.chain.lambda_q);
    read(ch, "lambda_pi", "chain.", c.chain.lambda_pi);
    read(ch, "auto", "chain.", c.chain.auto_lambda);
    read(ch, "beta", "chain.", c.chain.beta);
    read(ch, "running_decay", "chain.", c.chain.running_decay);
  }

  if (doc.contains("network")) {
    const json& n = object_at(doc, "network", "");
    reject_unknown(n, "network.", {"base_width", "base_depth", "scale_up_ratio", "scale_mode", "lr_rule"});
    read(n, "base_width", "network.", c.network.base_width);
    read(n, "base_depth", "network.", c.network.base_depth);
    read(n, "scale_up_ratio", "network.", c.network.scale_up_ratio);
    std::string mode = "widen";
    read(n, "scale_mode", "network.", mode);
    if (mode == "widen") c.network.scale_mode = nn::ScaleMode::Widen;
    else if (mode == "deepen") c.network.scale_mode = nn::ScaleMode::Deepen;
    else throw ConfigError("network.scale_mode: unknown mode '" + mode + "' (expected widen|deepen)");
    std::string rule = "sqrt";
    read(n, "lr_rule", "network.", rule);
    c.lr_rule = parse_lr_mode(rule);
  }

  read(doc, "total_steps", "", c.total_steps);
  read(doc, "metric_interval", "", c.metric_interval);
  if (doc.contains("snapshot_ring")) {
    const json& r = object_at(doc, "snapshot_ring", "");
    reject_unknown(r, "snapshot_ring.", {"max_lags", "interval"});
    read(r, "max_lags", "snapshot_ring.", c.snapshot_ring.max_lags);
    read(r, "interval", "snapshot_ring.", c.snapshot_ring.interval);
  }
  read(doc, "reference_batch", "", c.reference_batch);
  read(doc, "update_churn_every", "", c.update_churn_every);
  read(doc, "kernel_rank", "", c.kernel_rank);
  if (doc.contains("eval")) {
    const json& e = object_at(doc, "eval", "");
    reject_unknown(e, "eval.", {"episodes", "every_fraction"});
    read(e, "episodes", "eval.", c.eval.episodes);
    read(e, "every_fraction", "eval.", c.eval.every_fraction);
  }
  read(doc, "seeds", "", c.seeds);
  std::string out;
  read(doc, "output_dir", "", out);
  c.output_dir = out;
  if (doc.contains("sweep")) {
    const json& s = object_at(doc, "sweep", "");
    reject_unknown(s, "sweep.", {"lr", "tau"});
    read(s, "lr", "sweep.", c.sweep.lr);
    read(s, "tau", "sweep.", c.sweep.tau);
  }
  read(doc, "condition", "", c.condition);
  if (c.condition.empty()) c.condition = c.agent + "-" + chain::to_string(c.chain.mode);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  return parse_config(doc);
}

json to_json(const ExperimentConfig& c) {
  const agents::AgentHyperparams& h = c.hyperparams;
  json hp = {{"gamma", h.gamma},
             {"lr_actor", h.lr_actor},
             {"lr_critic", h.lr_critic},
             {"batch_size", h.batch_size},
             {"reg_batch_size", h.reg_batch_size},
             {"buffer_capacity", h.buffer_capacity},
             {"train_interval", h.train_interval},
             {"initial_random_steps", h.initial_random_steps},
             {"schedule_scale", h.schedule_scale},
             {"target_sync_interval", h.target_sync_interval},
             {"epsilon_initial", h.epsilon_initial},
             {"epsilon_final", h.epsilon_final},
             {"epsilon_decay_steps", h.epsilon_decay_steps},
             {"rollout_length", h.rollout_length},
             {"minibatches", h.minibatches},
             {"update_epochs", h.update_epochs},
             {"clip_epsilon", h.clip_epsilon},
             {"gae_lambda", h.gae_lambda},
             {"value_coef", h.value_coef},
             {"max_grad_norm", h.max_grad_norm},
             {"adam_eps", h.adam_eps},
             {"probe_batch_size", h.probe_batch_size},
             {"tau", h.tau},
             {"actor_interval", h.actor_interval},
             {"exploration_noise", h.exploration_noise},
             {"target_noise", h.target_noise},
             {"target_noise_clip", h.target_noise_clip},
             {"entropy_alpha", h.entropy_alpha}};
  json doc = {
      {"agent", c.agent},
      {"env", c.env},
      {"condition", c.condition},
      {"hyperparams", hp},
      {"chain",
       {{"mode", chain::to_string(c.chain.mode)},
        {"lambda_q", c.chain.lambda_q},
        {"lambda_pi", c.chain.lambda_pi},
        {"auto", c.chain.auto_lambda},
        {"beta", c.chain.beta},
        {"running_decay", c.chain.running_decay}}},
      {"network",
       {{"base_width", c.network.base_width},
        {"base_depth", c.network.base_depth},
        {"scale_up_ratio", c.network.scale_up_ratio},
        {"scale_mode", c.network.scale_mode == nn::ScaleMode::Widen ? "widen" : "deepen"},
        {"lr_rule", to_string(c.lr_rule)}}},
      {"total_steps", c.total_steps},
      {"metric_interval", c.metric_interval},
      {"snapshot_ring", {{"max_lags", c.snapshot_ring.max_lags}, {"interval", c.snapshot_ring.interval}}},
      {"reference_batch", c.reference_batch},
      {"update_churn_every", c.update_churn_every},
      {"kernel_rank", c.kernel_rank},
      {"eval", {{"episodes", c.eval.episodes}, {"every_fraction", c.eval.every_fraction}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir.string()},
  };
  if (!c.sweep.empty()) doc["sweep"] = {{"lr", c.sweep.lr}, {"tau", c.sweep.tau}};
  return doc;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  const char* root = std::getenv("CHURNLAB_OUTPUT_ROOT");
  if (root && *root && config.output_dir.is_relative()) return std::filesystem::path(root) / config.output_dir;
  return config.output_dir;
}

std::vector<ExperimentConfig> expand_sweep(const ExperimentConfig& config) {
  if (config.sweep.empty()) return {config};
  const std::vector<double> lrs = config.sweep.lr.empty() ? std::vector<double>{-1.0} : config.sweep.lr;
  const std::vector<double> taus = config.sweep.tau.empty() ? std::vector<double>{-1.0} : config.sweep.tau;
  std::vector<ExperimentConfig> out;
  for (double lr : lrs) {
    for (double tau : taus) {
      ExperimentConfig c = config;
      c.sweep = {};
      if (lr > 0.0) {
        c.hyperparams.lr_actor = lr;
        c.hyperparams.lr_critic = lr;
        c.condition += "_lr" + format_value(lr);
      }
      if (tau > 0.0) {
        c.hyperparams.tau = tau;
        c.condition += "_tau" + format_value(tau);
      }
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace churnlab::runner
