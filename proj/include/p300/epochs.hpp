#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace p300 {

// Labeled collection of fixed-shape EEG trials. Samples are stored
// trial-major, then channel-major: data[(trial * channels + c) * samples + s].
struct EpochSet {
  std::size_t n_trials = 0;
  std::size_t channels = 0;
  std::size_t samples = 0;
  double sample_rate_hz = 0.0;
  std::vector<double> data;
  std::vector<std::uint8_t> labels;  // 1 = P300 present
  std::optional<std::string> subject_id;

  static EpochSet zeros(std::size_t n_trials, std::size_t channels, std::size_t samples,
                        double sample_rate_hz);

  std::size_t trial_size() const { return channels * samples; }

  std::span<double> trial(std::size_t i) {
    return {data.data() + i * trial_size(), trial_size()};
  }
  std::span<const double> trial(std::size_t i) const {
    return {data.data() + i * trial_size(), trial_size()};
  }
  std::span<double> row(std::size_t i, std::size_t c) {
    return {data.data() + (i * channels + c) * samples, samples};
  }
  std::span<const double> row(std::size_t i, std::size_t c) const {
    return {data.data() + (i * channels + c) * samples, samples};
  }

  std::size_t positives() const;
  std::size_t negatives() const { return n_trials - positives(); }

  // Trials at the given indices, in that order.
  EpochSet subset(std::span<const std::size_t> indices) const;

  // Throws Error if sizes disagree, a label is not 0/1, or a sample is not finite.
  void validate() const;
};

// Concatenates sets sharing channel/sample/rate geometry.
EpochSet concatenate(std::span<const EpochSet* const> sets);

}  // namespace p300
