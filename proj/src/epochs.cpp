#include "p300/epochs.hpp"

#include <algorithm>
#include <cmath>

#include "p300/error.hpp"

namespace p300 {

EpochSet EpochSet::zeros(std::size_t n_trials, std::size_t channels, std::size_t samples,
                         double sample_rate_hz) {
  EpochSet set;
  set.n_trials = n_trials;
  set.channels = channels;
  set.samples = samples;
  set.sample_rate_hz = sample_rate_hz;
  set.data.assign(n_trials * channels * samples, 0.0);
  set.labels.assign(n_trials, 0);
  return set;
}

std::size_t EpochSet::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
}

EpochSet EpochSet::subset(std::span<const std::size_t> indices) const {
  EpochSet out = zeros(indices.size(), channels, samples, sample_rate_hz);
  out.subject_id = subject_id;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    require(indices[k] < n_trials, ErrorCode::invalid_argument,
            "trial index " + std::to_string(indices[k]) + " out of range");
    auto src = trial(indices[k]);
    std::copy(src.begin(), src.end(), out.trial(k).begin());
    out.labels[k] = labels[indices[k]];
  }
  return out;
}

void EpochSet::validate() const {
  require(data.size() == n_trials * channels * samples, ErrorCode::shape,
          "epoch data size does not match n_trials x channels x samples");
  require(labels.size() == n_trials, ErrorCode::shape, "label count does not match n_trials");
  for (std::size_t i = 0; i < n_trials; ++i) {
    require(labels[i] <= 1, ErrorCode::bad_label,
            "label of trial " + std::to_string(i) + " is not 0 or 1");
  }
  for (std::size_t k = 0; k < data.size(); ++k) {
    require(std::isfinite(data[k]), ErrorCode::numeric,
            "non-finite sample in trial " + std::to_string(k / std::max<std::size_t>(1, trial_size())));
  }
}

EpochSet concatenate(std::span<const EpochSet* const> sets) {
  require(!sets.empty(), ErrorCode::invalid_argument, "nothing to concatenate");
  const EpochSet& first = *sets.front();
  std::size_t total = 0;
  for (const EpochSet* s : sets) {
    require(s->channels == first.channels && s->samples == first.samples, ErrorCode::shape,
            "cannot concatenate epoch sets of different shapes");
    total += s->n_trials;
  }
  EpochSet out = EpochSet::zeros(total, first.channels, first.samples, first.sample_rate_hz);
  std::size_t at = 0;
  for (const EpochSet* s : sets) {
    std::copy(s->data.begin(), s->data.end(), out.data.begin() + at * out.trial_size());
    std::copy(s->labels.begin(), s->labels.end(), out.labels.begin() + at);
    at += s->n_trials;
  }
  return out;
}

}  // namespace p300
