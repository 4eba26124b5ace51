#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "slicevol/autodiff/tensor.hpp"
#include "slicevol/random.hpp"

namespace slicevol::train {

// Index pairs into a batch, with s = 1 exactly when both labels agree.
struct PairBatch {
  std::vector<std::size_t> anchors;
  std::vector<std::size_t> partners;
  std::vector<int> same;

  std::size_t size() const { return anchors.size(); }
  bool empty() const { return anchors.empty(); }
  std::size_t positives() const;
  void append(const PairBatch& other);
  // Throws ContractError on self-pairs, out-of-range indices or a pair label
  // that disagrees with `labels`.
  void validate(std::span<const int> labels) const;
};

// `count` pairs, each a fair coin between a positive and a negative pair. When
// only one kind is possible every pair is of that kind. Fewer than two
// examples gives an empty batch.
PairBatch sample_random_pairs(std::span<const int> labels, std::size_t count, Rng& rng);

// `count` same-label pairs; empty when no class has two members.
PairBatch sample_positive_pairs(std::span<const int> labels, std::size_t count, Rng& rng);

// For every anchor, the nearest opposite-label embedding by Euclidean
// distance (lowest index on ties). Empty unless both classes are present.
PairBatch mine_hard_negatives(std::span<const std::vector<double>> embeddings,
                              std::span<const int> labels);

}  // namespace slicevol::train
