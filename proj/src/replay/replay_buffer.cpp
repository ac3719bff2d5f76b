#include "churnlab/replay/replay_buffer.hpp"

#include <algorithm>
#include <string>
#include <unordered_set>

namespace churnlab::replay {

TransitionBatch to_batch(std::span<const Transition> transitions) {
  require(!transitions.empty(), "to_batch: empty transition list");
  const Eigen::Index n = static_cast<Eigen::Index>(transitions.size());
  const auto& first = transitions.front();
  TransitionBatch b;
  b.states.resize(first.state.size(), n);
  b.actions.resize(first.action.size(), n);
  b.next_states.resize(first.next_state.size(), n);
  b.rewards.resize(n);
  b.not_terminal.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Transition& t = transitions[static_cast<std::size_t>(i)];
    b.states.col(i) = t.state;
    b.actions.col(i) = t.action;
    b.next_states.col(i) = t.next_state;
    b.rewards[i] = t.reward;
    b.not_terminal[i] = t.terminal ? 0.0 : 1.0;
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw ConfigError("replay: capacity must be positive");
  items_.reserve(std::min<std::size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition transition) {
  ++insertions_;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(transition));
    return;
  }
  items_[head_] = std::move(transition);
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  require(i < items_.size(), "replay: index out of range");
  return items_[(head_ + i) % items_.size()];
}

std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng) {
  require(n <= population, "sample_indices: sample larger than population");
  std::vector<std::size_t> picked;
  picked.reserve(n);
  std::unordered_set<std::size_t> seen;
  seen.reserve(n * 2);
  for (std::size_t j = population - n; j < population; ++j) {
    std::uniform_int_distribution<std::size_t> dist(0, j);
    const std::size_t t = dist(rng);
    const std::size_t choice = seen.count(t) ? j : t;
    seen.insert(choice);
    picked.push_back(choice);
  }
  return picked;
}

std::vector<Transition> sample_batch(const ReplayBuffer& buffer, std::size_t n, Rng& rng) {
  if (buffer.size() < n)
    throw InsufficientDataError("replay: requested " + std::to_string(n) + " transitions from a buffer of " +
                                std::to_string(buffer.size()));
  std::vector<Transition> out;
  out.reserve(n);
  for (std::size_t idx : sample_indices(buffer.size(), n, rng)) out.push_back(buffer.at(idx));
  return out;
}

BatchTriplet sample_triplet(const ReplayBuffer& buffer, const BatchSizes& sizes, Rng& rng) {
  const std::size_t needed = std::max({sizes.train, sizes.reg, sizes.ref});
  if (buffer.size() < needed)
    throw InsufficientDataError("replay: buffer holds " + std::to_string(buffer.size()) +
                                " transitions, triplet needs " + std::to_string(needed));
  BatchTriplet t;
  t.train = sample_batch(buffer, sizes.train, rng);
  t.reg = sample_batch(buffer, sizes.reg, rng);
  t.ref = sample_batch(buffer, sizes.ref, rng);
  return t;
}

}  // namespace churnlab::replay
