#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "p300/error.hpp"
#include "p300/eval.hpp"

namespace p300::eval {

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (!(scores.size() == labels.size())) fail(ErrorCode::shape, "roc_auc: " + std::to_string(scores.size()) + " scores for " +
              std::to_string(labels.size()) + " labels");
  std::size_t positives = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(labels[i] <= 1)) fail(ErrorCode::bad_label, "roc_auc: labels must be 0 or 1");
    if (!(!std::isnan(scores[i]))) fail(ErrorCode::numeric, "roc_auc: score is NaN");
    positives += labels[i];
  }
  const std::size_t negatives = scores.size() - positives;
  if (!(positives > 0 && negatives > 0)) fail(ErrorCode::invalid_argument, "roc_auc needs at least one positive and one negative label");

  // Rank-sum form. Ranks are doubled so tied groups get exact integer
  // mid-ranks and the statistic stays exact in integer arithmetic.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::uint64_t doubled_rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t doubled_mid_rank = i + j + 1;  // 2 * mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) doubled_rank_sum += doubled_mid_rank;
    i = j;
  }
  const std::uint64_t p = positives;
  const std::uint64_t doubled_u = doubled_rank_sum - p * (p + 1);
  return static_cast<double>(doubled_u) / (2.0 * static_cast<double>(p) * static_cast<double>(negatives));
}

std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::uint8_t> labels,
                                                       std::size_t k, Rng& rng) {
  if (!(k >= 2)) fail(ErrorCode::invalid_argument, "k-fold needs k >= 2");
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!(labels[i] <= 1)) fail(ErrorCode::bad_label, "stratified_kfold: labels must be 0 or 1");
    by_class[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c)
    if (!(by_class[c].size() >= k)) fail(ErrorCode::invalid_argument, "class " + std::to_string(c) + " has " + std::to_string(by_class[c].size()) +
                " members, fewer than k = " + std::to_string(k));

  std::vector<std::vector<std::size_t>> folds(k);
  std::size_t next = 0;
  for (auto& members : by_class) {
    rng.shuffle(std::span<std::size_t>(members));
    // Continue the round-robin across classes so the larger folds of one
    // class do not pile onto the larger folds of the other.
    for (std::size_t index : members) {
      folds[next].push_back(index);
      next = (next + 1) % k;
    }
  }
  for (auto& fold : folds) std::sort(fold.begin(), fold.end());
  return folds;
}

Aggregate aggregate(std::span<const double> values) {
  if (!(!values.empty())) fail(ErrorCode::invalid_argument, "cannot aggregate zero values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  return {mean, std::sqrt(var)};
}

Aggregate EvalReport::summary() const {
  std::vector<double> aucs;
  aucs.reserve(records.size());
  for (const EvalRecord& r : records) aucs.push_back(r.auc);
  return aggregate(aucs);
}

}  // namespace p300::eval
