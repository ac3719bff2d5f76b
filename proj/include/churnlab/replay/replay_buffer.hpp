#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "churnlab/common.hpp"

namespace churnlab::replay {

/// One environment interaction. Discrete actions are stored as a one-element
/// vector holding the index.
struct Transition {
  Vector state;
  Vector action;
  double reward = 0.0;
  Vector next_state;
  bool terminal = false;
};

/// Column-stacked view of a list of transitions.
struct TransitionBatch {
  Matrix states;
  Matrix actions;
  Matrix next_states;
  Vector rewards;
  Vector not_terminal;  // 1 - terminal

  Eigen::Index size() const { return states.cols(); }
};

TransitionBatch to_batch(std::span<const Transition> transitions);

/// Fixed-capacity FIFO store; the oldest transition is evicted first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition transition);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t insertion_count() const { return insertions_; }
  bool empty() const { return items_.empty(); }

  /// i = 0 is the oldest stored transition.
  const Transition& at(std::size_t i) const;

 private:
  std::size_t capacity_;
  std::vector<Transition> items_;
  std::size_t head_ = 0;  // position of the oldest item once the ring is full
  std::uint64_t insertions_ = 0;
};

struct BatchSizes {
  std::size_t train = 32;
  std::size_t reg = 32;
  std::size_t ref = 0;
};

/// Training, regularization and reference batches. Each is sampled without
/// replacement internally; the three draws are independent, so they may overlap.
struct BatchTriplet {
  std::vector<Transition> train;
  std::vector<Transition> reg;
  std::vector<Transition> ref;
};

/// Uniform sample of n distinct stored positions (Floyd's algorithm).
std::vector<std::size_t> sample_indices(std::size_t population, std::size_t n, Rng& rng);

std::vector<Transition> sample_batch(const ReplayBuffer& buffer, std::size_t n, Rng& rng);

/// Throws InsufficientDataError when the buffer holds fewer than max(sizes) items.
BatchTriplet sample_triplet(const ReplayBuffer& buffer, const BatchSizes& sizes, Rng& rng);

}  // namespace churnlab::replay
