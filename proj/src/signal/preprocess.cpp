#include <cmath>
#include <string>

#include "p300/error.hpp"
#include "p300/signal.hpp"

namespace p300::signal {

EpochSet remove_dc(EpochSet epochs) {
  for (std::size_t i = 0; i < epochs.n_trials; ++i) {
    for (std::size_t c = 0; c < epochs.channels; ++c) {
      auto row = epochs.row(i, c);
      double sum = 0.0;
      for (double v : row) sum += v;
      const double mean = sum / static_cast<double>(row.size());
      for (double& v : row) v -= mean;
    }
  }
  return epochs;
}

EpochSet detrend_linear(EpochSet epochs) {
  require(epochs.samples >= 2, ErrorCode::invalid_argument, "detrending needs at least 2 samples");
  const std::size_t n = epochs.samples;
  const double center = static_cast<double>(n - 1) / 2.0;
  double t_sq = 0.0;
  for (std::size_t s = 0; s < n; ++s) t_sq += (s - center) * (s - center);

  for (std::size_t i = 0; i < epochs.n_trials; ++i) {
    for (std::size_t c = 0; c < epochs.channels; ++c) {
      auto row = epochs.row(i, c);
      double sum = 0.0;
      double cross = 0.0;
      for (std::size_t s = 0; s < n; ++s) {
        sum += row[s];
        cross += (s - center) * row[s];
      }
      const double mean = sum / static_cast<double>(n);
      const double slope = cross / t_sq;
      for (std::size_t s = 0; s < n; ++s) row[s] -= mean + slope * (s - center);
    }
  }
  return epochs;
}

ChannelStats channel_stats(const EpochSet& train) {
  require(train.n_trials > 0, ErrorCode::invalid_argument, "training set is empty");
  ChannelStats stats;
  stats.mean.assign(train.channels, 0.0);
  stats.stddev.assign(train.channels, 0.0);
  const double count = static_cast<double>(train.n_trials * train.samples);
  for (std::size_t c = 0; c < train.channels; ++c) {
    double sum = 0.0;
    for (std::size_t i = 0; i < train.n_trials; ++i)
      for (double v : train.row(i, c)) sum += v;
    const double mean = sum / count;
    double sq = 0.0;
    for (std::size_t i = 0; i < train.n_trials; ++i)
      for (double v : train.row(i, c)) sq += (v - mean) * (v - mean);
    stats.mean[c] = mean;
    stats.stddev[c] = std::sqrt(sq / count);
  }
  return stats;
}

EpochSet standardize(EpochSet set, const ChannelStats& stats) {
  require(stats.mean.size() == set.channels, ErrorCode::shape,
          "channel statistics do not match the set's channel count");
  for (std::size_t i = 0; i < set.n_trials; ++i) {
    for (std::size_t c = 0; c < set.channels; ++c) {
      const double scale = 1.0 / (stats.stddev[c] + kStandardizeEpsilon);
      for (double& v : set.row(i, c)) v = (v - stats.mean[c]) * scale;
    }
  }
  return set;
}

StandardizedSets standardize_channels(const EpochSet& train, std::span<const EpochSet> others) {
  StandardizedSets out;
  out.stats = channel_stats(train);
  out.train = standardize(train, out.stats);
  for (const EpochSet& other : others) out.others.push_back(standardize(other, out.stats));
  return out;
}

std::size_t epoch_length(double epoch_ms, double sample_rate_hz) {
  require(epoch_ms > 0.0 && sample_rate_hz > 0.0, ErrorCode::invalid_argument,
          "epoch length and sample rate must be positive");
  return static_cast<std::size_t>(std::llround(epoch_ms / 1000.0 * sample_rate_hz));
}

EpochSet extract_epochs(const ContinuousRecording& recording, double epoch_ms,
                        std::optional<std::size_t> samples_override) {
  require(recording.channels >= 1, ErrorCode::invalid_argument, "recording has no channels");
  require(recording.data.size() == recording.channels * recording.samples, ErrorCode::shape,
          "recording data size does not match channels x samples");
  const std::size_t length =
      samples_override ? *samples_override : epoch_length(epoch_ms, recording.sample_rate_hz);
  require(length >= 1, ErrorCode::invalid_argument, "epoch length rounds to zero samples");

  EpochSet out = EpochSet::zeros(recording.onsets.size(), recording.channels, length,
                                 recording.sample_rate_hz);
  for (std::size_t i = 0; i < recording.onsets.size(); ++i) {
    const auto& onset = recording.onsets[i];
    require(onset.sample_index + length <= recording.samples, ErrorCode::invalid_argument,
            "stimulus " + std::to_string(i) + " at sample " + std::to_string(onset.sample_index) +
                " leaves fewer than " + std::to_string(length) + " samples before the end");
    for (std::size_t c = 0; c < recording.channels; ++c) {
      auto src = recording.row(c).subspan(onset.sample_index, length);
      std::copy(src.begin(), src.end(), out.row(i, c).begin());
    }
    out.labels[i] = onset.is_target ? 1 : 0;
  }
  return out;
}

}  // namespace p300::signal
