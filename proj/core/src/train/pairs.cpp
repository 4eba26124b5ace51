#include "slicevol/train/pairs.hpp"

#include <limits>

#include "slicevol/errors.hpp"

namespace slicevol::train {

namespace {

struct ClassIndex {
  std::vector<std::size_t> members[2];

  explicit ClassIndex(std::span<const int> labels) {
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] != 0 && labels[i] != 1) throw ContractError("labels must be 0 or 1");
      members[labels[i]].push_back(i);
    }
  }
  bool both() const { return !members[0].empty() && !members[1].empty(); }
  bool positive_possible() const { return members[0].size() >= 2 || members[1].size() >= 2; }
};

void add_positive(const ClassIndex& idx, std::span<const int> labels, PairBatch& out, Rng& rng) {
  // Anchor drawn from the examples that have a same-label partner.
  std::vector<std::size_t> eligible;
  for (int c = 0; c < 2; ++c) {
    if (idx.members[c].size() >= 2) {
      eligible.insert(eligible.end(), idx.members[c].begin(), idx.members[c].end());
    }
  }
  const std::size_t a = eligible[uniform_index(rng, eligible.size())];
  const auto& same = idx.members[labels[a]];
  std::size_t k = uniform_index(rng, same.size() - 1);
  std::size_t p = same[k];
  if (p == a) p = same[same.size() - 1];
  out.anchors.push_back(a);
  out.partners.push_back(p);
  out.same.push_back(1);
}

void add_negative(const ClassIndex& idx, std::span<const int> labels, PairBatch& out, Rng& rng) {
  const std::size_t a = uniform_index(rng, labels.size());
  const auto& other = idx.members[1 - labels[a]];
  out.anchors.push_back(a);
  out.partners.push_back(other[uniform_index(rng, other.size())]);
  out.same.push_back(0);
}

}  // namespace

std::size_t PairBatch::positives() const {
  std::size_t n = 0;
  for (int s : same) n += s == 1;
  return n;
}

void PairBatch::append(const PairBatch& other) {
  anchors.insert(anchors.end(), other.anchors.begin(), other.anchors.end());
  partners.insert(partners.end(), other.partners.begin(), other.partners.end());
  same.insert(same.end(), other.same.begin(), other.same.end());
}

void PairBatch::validate(std::span<const int> labels) const {
  if (partners.size() != anchors.size() || same.size() != anchors.size()) {
    throw ContractError("pair batch columns differ in length");
  }
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (anchors[i] >= labels.size() || partners[i] >= labels.size()) {
      throw ContractError("pair index out of range");
    }
    if (anchors[i] == partners[i]) throw ContractError("pair joins an example with itself");
    if (same[i] != (labels[anchors[i]] == labels[partners[i]] ? 1 : 0)) {
      throw ContractError("pair label disagrees with the example labels");
    }
  }
}

PairBatch sample_random_pairs(std::span<const int> labels, std::size_t count, Rng& rng) {
  PairBatch out;
  if (labels.size() < 2) return out;
  const ClassIndex idx(labels);
  const bool pos_ok = idx.positive_possible();
  const bool neg_ok = idx.both();
  for (std::size_t i = 0; i < count; ++i) {
    const bool want_positive = uniform01(rng) < 0.5;
    if ((want_positive && pos_ok) || !neg_ok) {
      add_positive(idx, labels, out, rng);
    } else {
      add_negative(idx, labels, out, rng);
    }
  }
  return out;
}

PairBatch sample_positive_pairs(std::span<const int> labels, std::size_t count, Rng& rng) {
  PairBatch out;
  const ClassIndex idx(labels);
  if (!idx.positive_possible()) return out;
  for (std::size_t i = 0; i < count; ++i) add_positive(idx, labels, out, rng);
  return out;
}

PairBatch mine_hard_negatives(std::span<const std::vector<double>> embeddings,
                              std::span<const int> labels) {
  if (embeddings.size() != labels.size()) {
    throw ContractError("mine_hard_negatives: embeddings and labels differ in count");
  }
  PairBatch out;
  const ClassIndex idx(labels);
  if (!idx.both()) return out;
  for (std::size_t a = 0; a < embeddings.size(); ++a) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j : idx.members[1 - labels[a]]) {
      if (embeddings[j].size() != embeddings[a].size()) {
        throw DimensionError("mine_hard_negatives: embeddings differ in width");
      }
      double d = 0.0;
      for (std::size_t c = 0; c < embeddings[a].size(); ++c) {
        const double t = embeddings[a][c] - embeddings[j][c];
        d += t * t;
      }
      // Members are scanned in increasing index order, so strict < keeps the lowest on ties.
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    out.anchors.push_back(a);
    out.partners.push_back(best);
    out.same.push_back(0);
  }
  return out;
}

}  // namespace slicevol::train
