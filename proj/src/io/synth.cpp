#include "p300/synth.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "p300/error.hpp"
#include "p300/rng.hpp"

namespace p300::synth {

void SyntheticConfig::validate() const {
  auto check = [](bool ok, const std::string& message) {
    require(ok, ErrorCode::invalid_argument, message);
  };
  check(n_subjects >= 1, "n_subjects must be >= 1");
  check(trials_per_subject >= 2, "trials_per_subject must be >= 2");
  check(target_ratio > 0.0 && target_ratio < 1.0, "target_ratio must be in (0, 1)");
  check(channels >= 1 && samples >= 3, "need at least one channel and three samples");
  check(sample_rate_hz > 0.0, "sample_rate_hz must be positive");
  check(p300_amplitude >= 0.0 && noise_amplitude >= 0.0, "amplitudes must be >= 0");
  check(p300_width_ms > 0.0, "p300_width_ms must be positive");
  check(latency_jitter_ms >= 0.0 && amplitude_jitter >= 0.0 && amplitude_jitter < 1.0,
        "jitter must be non-negative (relative amplitude jitter below 1)");
  const double epoch_ms = 1000.0 * static_cast<double>(samples) / sample_rate_hz;
  check(p300_latency_ms - latency_jitter_ms >= 0.0 &&
            p300_latency_ms + latency_jitter_ms + p300_width_ms <= epoch_ms,
        "p300 latency and width must fall within the " + std::to_string(epoch_ms) + " ms epoch");
  const std::size_t targets = target_count(*this);
  check(targets >= 1 && targets < trials_per_subject, "target ratio leaves one class empty");
}

std::vector<double> channel_profile(std::size_t channels) {
  std::vector<double> profile(channels, 1.0);
  if (channels == 1) return profile;
  for (std::size_t c = 0; c < channels; ++c)
    profile[c] = 0.4 + 0.6 * static_cast<double>(c) / static_cast<double>(channels - 1);
  return profile;
}

std::size_t target_count(const SyntheticConfig& config) {
  return static_cast<std::size_t>(
      std::llround(config.target_ratio * static_cast<double>(config.trials_per_subject)));
}

namespace {

// Integrated white noise with its least-squares line removed, scaled to the
// requested RMS.
void colored_noise(Rng& rng, double rms, std::span<double> row) {
  const std::size_t n = row.size();
  double level = 0.0;
  for (double& v : row) {
    level += rng.normal();
    v = level;
  }
  const double t_mean = 0.5 * static_cast<double>(n - 1);
  double mean = 0.0;
  double slope_num = 0.0;
  double slope_den = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += row[i];
  mean /= static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) - t_mean;
    slope_num += t * (row[i] - mean);
    slope_den += t * t;
  }
  const double slope = slope_num / slope_den;
  double power = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    row[i] -= mean + slope * (static_cast<double>(i) - t_mean);
    power += row[i] * row[i];
  }
  const double current = std::sqrt(power / static_cast<double>(n));
  const double scale = current > 0.0 ? rms / current : 0.0;
  for (double& v : row) v *= scale;
}

}  // namespace

EpochSet synth_subject(const SyntheticConfig& config, std::size_t subject) {
  config.validate();
  require(subject < config.n_subjects, ErrorCode::invalid_argument,
          "subject index " + std::to_string(subject) + " out of range");
  Rng rng(derive_seed(config.seed, subject));

  const double latency_ms =
      config.p300_latency_ms + rng.uniform(-config.latency_jitter_ms, config.latency_jitter_ms);
  const double amplitude =
      config.p300_amplitude * (1.0 + rng.uniform(-config.amplitude_jitter, config.amplitude_jitter));
  const double center = latency_ms * config.sample_rate_hz / 1000.0;
  const double sigma = config.p300_width_ms * config.sample_rate_hz / 1000.0;
  std::vector<double> bump(config.samples);
  for (std::size_t s = 0; s < config.samples; ++s) {
    const double d = (static_cast<double>(s) - center) / sigma;
    bump[s] = amplitude * std::exp(-0.5 * d * d);
  }
  const std::vector<double> profile = channel_profile(config.channels);

  EpochSet set = EpochSet::zeros(config.trials_per_subject, config.channels, config.samples,
                                 config.sample_rate_hz);
  const std::size_t targets = target_count(config);
  std::fill(set.labels.begin(), set.labels.begin() + static_cast<std::ptrdiff_t>(targets), 1);
  rng.shuffle(std::span<std::uint8_t>(set.labels));

  for (std::size_t i = 0; i < set.n_trials; ++i) {
    for (std::size_t c = 0; c < config.channels; ++c) {
      const std::span<double> row = set.row(i, c);
      colored_noise(rng, config.noise_amplitude, row);
      if (set.labels[i] == 1)
        for (std::size_t s = 0; s < config.samples; ++s) row[s] += profile[c] * bump[s];
    }
  }
  char id[16];
  std::snprintf(id, sizeof(id), "S%02zu", subject + 1);
  set.subject_id = id;
  return set;
}

std::vector<EpochSet> synth_generate(const SyntheticConfig& config) {
  config.validate();
  std::vector<EpochSet> cohort;
  cohort.reserve(config.n_subjects);
  for (std::size_t s = 0; s < config.n_subjects; ++s) cohort.push_back(synth_subject(config, s));
  return cohort;
}

}  // namespace p300::synth
