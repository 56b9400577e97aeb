#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "p300/epochs.hpp"

namespace p300::signal {

struct StimulusOnset {
  std::size_t sample_index = 0;
  bool is_target = false;
};

// Continuous multichannel recording, channels x samples, row-major.
struct ContinuousRecording {
  std::size_t channels = 0;
  std::size_t samples = 0;
  double sample_rate_hz = 0.0;
  std::vector<double> data;
  std::vector<StimulusOnset> onsets;

  std::span<double> row(std::size_t c) { return {data.data() + c * samples, samples}; }
  std::span<const double> row(std::size_t c) const { return {data.data() + c * samples, samples}; }
};

// One biquad, a[0] == 1.
struct SecondOrderSection {
  std::array<double, 3> b{};
  std::array<double, 3> a{1.0, 0.0, 0.0};
};

// Rational IIR filter. `b`/`a` hold the expanded transfer function. Designed
// filters also carry the equivalent cascade of second-order sections; when
// present, the cascade is what gets evaluated and applied, because the
// expanded polynomials of a narrow low-frequency band lose most of their
// precision to rounding.
struct IirFilter {
  std::vector<double> b;
  std::vector<double> a;
  std::vector<SecondOrderSection> sections;
  int order = 0;
  double low_hz = 0.0;
  double high_hz = 0.0;
  double sample_rate_hz = 0.0;

  // H(e^{jw}) at the given frequency. Requires sample_rate_hz > 0.
  std::complex<double> response(double freq_hz) const;
  std::complex<double> response_at(double omega) const;
  std::vector<std::complex<double>> poles() const;
  bool is_stable() const;
};

// Filter from raw coefficients; normalizes so that a[0] == 1.
IirFilter make_filter(std::vector<double> b, std::vector<double> a);

// Analog Butterworth prototype, lowpass-to-bandpass, bilinear transform with
// pre-warped band edges. |H| is 1/sqrt(2) at both edges.
IirFilter design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                      double sample_rate_hz);

// Single-pass causal filtering of one signal.
std::vector<double> filter_signal(const IirFilter& filter, std::span<const double> x);

ContinuousRecording apply_iir_filter(const IirFilter& filter, const ContinuousRecording& recording);

// Filters every (trial, channel) row independently.
EpochSet apply_iir_filter(const IirFilter& filter, const EpochSet& epochs);

EpochSet remove_dc(EpochSet epochs);
EpochSet detrend_linear(EpochSet epochs);

struct ChannelStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline constexpr double kStandardizeEpsilon = 1e-8;

ChannelStats channel_stats(const EpochSet& train);
EpochSet standardize(EpochSet set, const ChannelStats& stats);

struct StandardizedSets {
  EpochSet train;
  std::vector<EpochSet> others;
  ChannelStats stats;
};

// Per-channel statistics over every training trial and sample, applied
// unchanged to each set in `others`.
StandardizedSets standardize_channels(const EpochSet& train, std::span<const EpochSet> others);

std::size_t epoch_length(double epoch_ms, double sample_rate_hz);

EpochSet extract_epochs(const ContinuousRecording& recording, double epoch_ms,
                        std::optional<std::size_t> samples_override = std::nullopt);

// Roots of sum_k coeffs[k] x^(n-k) (highest power first).
std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs);

}  // namespace p300::signal
