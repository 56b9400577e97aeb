#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "p300/epochs.hpp"

namespace p300::synth {

// Oddball-paradigm cohort. Every trial is colored background noise; targets
// add a Gaussian bump whose latency and amplitude vary per subject around a
// shared template.
struct SyntheticConfig {
  std::size_t n_subjects = 22;
  std::size_t trials_per_subject = 2880;
  double target_ratio = 1.0 / 6.0;
  std::size_t channels = 6;
  std::size_t samples = 206;
  double sample_rate_hz = 256.0;
  double p300_latency_ms = 300.0;
  double p300_width_ms = 80.0;  // standard deviation of the bump
  double p300_amplitude = 1.0;
  double noise_amplitude = 1.0;  // RMS of every noise row
  double latency_jitter_ms = 30.0;  // per-subject latency offset, uniform +-
  double amplitude_jitter = 0.2;    // per-subject relative amplitude, uniform +-
  std::uint64_t seed = 42;

  // Throws Error(invalid_argument) on an unusable configuration.
  void validate() const;
};

// Weight of channel c in the target bump: rises linearly from 0.4 on the
// first channel to 1.0 on the last.
std::vector<double> channel_profile(std::size_t channels);

std::size_t target_count(const SyntheticConfig& config);

// Each subject draws from its own stream, so any one subject can be
// generated without the others.
EpochSet synth_subject(const SyntheticConfig& config, std::size_t subject);
std::vector<EpochSet> synth_generate(const SyntheticConfig& config);

}  // namespace p300::synth
