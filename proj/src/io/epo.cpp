#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "p300/error.hpp"
#include "p300/io.hpp"

namespace p300::io {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put(std::string& buf, T value) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(value);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.append(bytes.data(), bytes.size());
}

template <class T>
T get(const char* p) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

constexpr std::size_t kHeaderBytes = sizeof(kEpochMagic) + 3 * 4 + 4;

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open '" + path.string() + "'");
  return in;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

bool parse_double(std::string_view field, double& value) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  return ec == std::errc() && ptr == field.data() + field.size() && !field.empty();
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

void write_epochs(std::ostream& out, const EpochSet& set) {
  set.validate();
  constexpr auto u32_max = std::numeric_limits<std::uint32_t>::max();
  require(set.n_trials <= u32_max && set.channels <= u32_max && set.samples <= u32_max,
          ErrorCode::invalid_argument, "epoch set dimensions exceed the u32 header fields");
  std::string buf;
  buf.reserve(kHeaderBytes + set.data.size() * 4 + set.n_trials);
  buf.append(kEpochMagic, sizeof(kEpochMagic));
  put(buf, static_cast<std::uint32_t>(set.n_trials));
  put(buf, static_cast<std::uint32_t>(set.channels));
  put(buf, static_cast<std::uint32_t>(set.samples));
  put(buf, static_cast<float>(set.sample_rate_hz));
  for (double v : set.data) put(buf, static_cast<float>(v));
  for (std::uint8_t label : set.labels) buf.push_back(static_cast<char>(label));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), ErrorCode::io, "write failed");
}

void write_epochs(const std::filesystem::path& path, const EpochSet& set) {
  std::ofstream out = open_out(path);
  write_epochs(out, set);
}

EpochSet read_epochs(std::istream& in) {
  const std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  require(bytes.size() >= sizeof(kEpochMagic) &&
              std::memcmp(bytes.data(), kEpochMagic, sizeof(kEpochMagic)) == 0,
          ErrorCode::bad_magic, "not an EPO1 file (magic 'EPOCHSv1' missing)");
  require(bytes.size() >= kHeaderBytes, ErrorCode::truncated_payload,
          "header truncated: " + std::to_string(bytes.size()) + " of " +
              std::to_string(kHeaderBytes) + " bytes");

  const char* p = bytes.data() + sizeof(kEpochMagic);
  EpochSet set;
  set.n_trials = get<std::uint32_t>(p);
  set.channels = get<std::uint32_t>(p + 4);
  set.samples = get<std::uint32_t>(p + 8);
  set.sample_rate_hz = get<float>(p + 12);

  // 64-bit products of u32 fields cannot overflow before the size check.
  const std::uint64_t values = static_cast<std::uint64_t>(set.n_trials) * set.channels * set.samples;
  const std::uint64_t expected = kHeaderBytes + values * 4 + set.n_trials;
  require(bytes.size() >= expected, ErrorCode::truncated_payload,
          "payload truncated: expected " + std::to_string(expected) + " bytes, found " +
              std::to_string(bytes.size()));
  require(bytes.size() == expected, ErrorCode::parse,
          std::to_string(bytes.size() - expected) + " unexpected trailing bytes");

  p = bytes.data() + kHeaderBytes;
  set.data.resize(values);
  for (std::size_t i = 0; i < values; ++i) set.data[i] = get<float>(p + 4 * i);
  p += 4 * values;
  set.labels.resize(set.n_trials);
  for (std::size_t i = 0; i < set.n_trials; ++i) {
    const auto label = static_cast<std::uint8_t>(p[i]);
    require(label <= 1, ErrorCode::bad_label,
            "trial " + std::to_string(i) + " has label byte " + std::to_string(label));
    set.labels[i] = label;
  }
  for (std::size_t i = 0; i < values; ++i)
    require(std::isfinite(set.data[i]), ErrorCode::numeric,
            "non-finite sample at index " + std::to_string(i));
  return set;
}

EpochSet read_epochs(const std::filesystem::path& path) {
  std::ifstream in = open_in(path);
  return read_epochs(in);
}

EpochSet read_csv_epochs(std::istream& in, std::size_t channels, std::size_t samples,
                         double sample_rate_hz) {
  require(channels > 0 && samples > 0, ErrorCode::invalid_argument,
          "channels and samples must be positive");
  EpochSet set;
  set.channels = channels;
  set.samples = samples;
  set.sample_rate_hz = sample_rate_hz;
  const std::size_t width = 1 + channels * samples;

  std::string line;
  std::size_t row = 0;
  bool first_content = true;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    double label = 0.0;
    if (first_content) {
      first_content = false;
      if (!parse_double(fields[0], label)) continue;  // header
    }
    require(fields.size() == width, ErrorCode::parse,
            "row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                " fields, expected " + std::to_string(width));
    require(parse_double(fields[0], label), ErrorCode::parse,
            "row " + std::to_string(row) + ": label is not a number");
    require(label == 0.0 || label == 1.0, ErrorCode::bad_label,
            "row " + std::to_string(row) + ": label must be 0 or 1");
    set.labels.push_back(static_cast<std::uint8_t>(label));
    for (std::size_t f = 1; f < width; ++f) {
      double v = 0.0;
      require(parse_double(fields[f], v) && std::isfinite(v), ErrorCode::parse,
              "row " + std::to_string(row) + ", column " + std::to_string(f + 1) +
                  ": not a finite number");
      set.data.push_back(v);
    }
  }
  set.n_trials = set.labels.size();
  return set;
}

EpochSet read_csv_epochs(const std::filesystem::path& path, std::size_t channels,
                         std::size_t samples, double sample_rate_hz) {
  std::ifstream in = open_in(path);
  return read_csv_epochs(in, channels, samples, sample_rate_hz);
}

void write_csv_epochs(std::ostream& out, const EpochSet& set) {
  set.validate();
  std::ostringstream text;
  text.precision(std::numeric_limits<double>::max_digits10);
  text << "label";
  for (std::size_t c = 0; c < set.channels; ++c)
    for (std::size_t s = 0; s < set.samples; ++s) text << ",c" << c << "_s" << s;
  text << '\n';
  for (std::size_t i = 0; i < set.n_trials; ++i) {
    text << static_cast<int>(set.labels[i]);
    for (double v : set.trial(i)) text << ',' << v;
    text << '\n';
  }
  out << text.str();
  require(static_cast<bool>(out), ErrorCode::io, "write failed");
}

void write_csv_epochs(const std::filesystem::path& path, const EpochSet& set) {
  std::ofstream out = open_out(path);
  write_csv_epochs(out, set);
}

}  // namespace p300::io
