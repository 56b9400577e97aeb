#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>

#include "p300/epochs.hpp"

namespace p300::io {

inline constexpr char kEpochMagic[8] = {'E', 'P', 'O', 'C', 'H', 'S', 'v', '1'};

// EPO1 binary layout (little-endian): 8-byte magic, u32 n_trials, u32
// channels, u32 samples, f32 sample rate, n_trials*channels*samples f32
// samples (trial-major, then channel-major), n_trials label bytes.
void write_epochs(std::ostream& out, const EpochSet& set);
void write_epochs(const std::filesystem::path& path, const EpochSet& set);
EpochSet read_epochs(std::istream& in);
EpochSet read_epochs(const std::filesystem::path& path);

// One trial per row: the label, then channels*samples values, channel-major.
// A leading header row is detected and skipped.
EpochSet read_csv_epochs(std::istream& in, std::size_t channels, std::size_t samples,
                         double sample_rate_hz = 256.0);
EpochSet read_csv_epochs(const std::filesystem::path& path, std::size_t channels,
                         std::size_t samples, double sample_rate_hz = 256.0);
void write_csv_epochs(std::ostream& out, const EpochSet& set);
void write_csv_epochs(const std::filesystem::path& path, const EpochSet& set);

}  // namespace p300::io
