#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <sstream>

#include "oracles.hpp"
#include "p300/error.hpp"
#include "p300/io.hpp"
#include "p300/synth.hpp"

using namespace p300;
using namespace p300::io;

namespace {

EpochSet random_set(std::size_t n, std::size_t c, std::size_t s, std::uint64_t seed) {
  EpochSet set = EpochSet::zeros(n, c, s, 256);
  Rng rng(seed);
  for (double& v : set.data) v = rng.normal();
  for (auto& l : set.labels) l = rng.uniform() < 0.3;
  return set;
}

// Bytes of a little-endian file assembled by hand.
struct Bytes {
  std::string data;
  Bytes& u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) data.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    return *this;
  }
  Bytes& f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    return u32(v);
  }
  Bytes& raw(const std::string& s) {
    data += s;
    return *this;
  }
};

ErrorCode read_error(const std::string& bytes) {
  std::istringstream in(bytes);
  try {
    read_epochs(in);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

double as_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

TEST_SUITE("io") {

TEST_CASE("epoch file round trip") {
  const EpochSet set = random_set(7, 3, 11, 1);
  std::ostringstream out;
  write_epochs(out, set);
  CHECK(out.str().size() == 8 + 12 + 4 + 7 * 3 * 11 * 4 + 7);
  std::istringstream in(out.str());
  const EpochSet back = read_epochs(in);
  CHECK(back.n_trials == 7);
  CHECK(back.channels == 3);
  CHECK(back.samples == 11);
  CHECK(back.sample_rate_hz == 256.0);
  CHECK(back.labels == set.labels);
  for (std::size_t i = 0; i < set.data.size(); ++i) CHECK(back.data[i] == as_f32(set.data[i]));

  // A second trip through f32 is lossless.
  std::ostringstream again;
  write_epochs(again, back);
  CHECK(again.str() == out.str());
}

TEST_CASE("epoch file layout is little-endian as documented") {
  EpochSet set = EpochSet::zeros(1, 2, 3, 250);
  for (std::size_t i = 0; i < 6; ++i) set.data[i] = 0.5 * i;
  set.labels[0] = 1;
  std::ostringstream out;
  write_epochs(out, set);
  Bytes expected;
  expected.raw("EPOCHSv1").u32(1).u32(2).u32(3).f32(250.0f);
  for (int i = 0; i < 6; ++i) expected.f32(0.5f * i);
  expected.data.push_back('\x01');
  CHECK(out.str() == expected.data);
}

TEST_CASE("epoch file errors are distinct") {
  CHECK(read_error("") == ErrorCode::bad_magic);
  CHECK(read_error("EPOCHSv2") == ErrorCode::bad_magic);
  CHECK(read_error("EPOCHSv1") == ErrorCode::truncated_payload);
  Bytes shortPayload;
  shortPayload.raw("EPOCHSv1").u32(1).u32(2).u32(3).f32(256.0f);
  for (int i = 0; i < 5; ++i) shortPayload.f32(1.0f);
  CHECK(read_error(shortPayload.data) == ErrorCode::truncated_payload);

  Bytes badLabel;
  badLabel.raw("EPOCHSv1").u32(2).u32(1).u32(1).f32(256.0f).f32(1.0f).f32(2.0f);
  badLabel.data += std::string("\x00\x02", 2);
  CHECK(read_error(badLabel.data) == ErrorCode::bad_label);

  Bytes trailing;
  trailing.raw("EPOCHSv1").u32(1).u32(1).u32(1).f32(256.0f).f32(1.0f);
  trailing.data += std::string("\x01\x00", 2);
  CHECK(read_error(trailing.data) == ErrorCode::parse);

  CHECK_THROWS_AS(read_epochs(std::filesystem::path("/nonexistent/x.epo")), Error);
}

TEST_CASE("epoch files on disk") {
  const auto dir = std::filesystem::temp_directory_path() / "p300_io_test";
  std::filesystem::create_directories(dir);
  const EpochSet set = random_set(4, 2, 5, 2);
  write_epochs(dir / "a.epo", set);
  const EpochSet back = read_epochs(dir / "a.epo");
  CHECK(back.labels == set.labels);
  CHECK(back.data[3] == as_f32(set.data[3]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("csv epochs") {
  std::istringstream one("1, 0.5, 1.5, 2.5, -1, -2, -3\n");
  const EpochSet set = read_csv_epochs(one, 2, 3);
  CHECK(set.n_trials == 1);
  CHECK(set.labels[0] == 1);
  CHECK(set.row(0, 1)[2] == -3.0);
  CHECK(set.sample_rate_hz == 256.0);

  std::istringstream header("label,c0_s0,c0_s1\n0,1,2\n1,3,4\n");
  const EpochSet h = read_csv_epochs(header, 1, 2, 128);
  CHECK(h.n_trials == 2);
  CHECK(h.sample_rate_hz == 128.0);

  std::istringstream ragged("1,1,2,3,4,5,6\n0,1,2\n");
  try {
    read_csv_epochs(ragged, 2, 3);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  std::istringstream label("2,1,2\n");
  CHECK_THROWS_AS(read_csv_epochs(label, 1, 2), Error);
  std::istringstream text("1,1,abc\n");
  CHECK_THROWS_AS(read_csv_epochs(text, 1, 2), Error);
}

TEST_CASE("csv written from epoch-file content reads back identically") {
  std::ostringstream bin;
  write_epochs(bin, random_set(9, 3, 4, 3));
  std::istringstream bin_in(bin.str());
  const EpochSet from_file = read_epochs(bin_in);
  std::ostringstream csv;
  write_csv_epochs(csv, from_file);
  CHECK(csv.str().rfind("label,c0_s0,c0_s1", 0) == 0);
  std::istringstream csv_in(csv.str());
  const EpochSet back = read_csv_epochs(csv_in, 3, 4);
  CHECK(back.data == from_file.data);
  CHECK(back.labels == from_file.labels);
}

}  // TEST_SUITE

TEST_SUITE("synth") {

TEST_CASE("label counts are exact") {
  synth::SyntheticConfig c;
  c.n_subjects = 1;
  CHECK(synth::target_count(c) == 480);
  const EpochSet s = synth::synth_subject(c, 0);
  CHECK(s.n_trials == 2880);
  CHECK(s.positives() == 480);
  CHECK(s.negatives() == 2400);
  CHECK(s.channels == 6);
  CHECK(s.samples == 206);
  CHECK(s.subject_id == "S01");
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("generation is deterministic and subjects differ") {
  synth::SyntheticConfig c;
  c.n_subjects = 3;
  c.trials_per_subject = 60;
  const auto a = synth::synth_generate(c);
  const auto b = synth::synth_generate(c);
  REQUIRE(a.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a[i].data == b[i].data);
    CHECK(a[i].labels == b[i].labels);
  }
  CHECK(a[0].data != a[1].data);
  CHECK(synth::synth_subject(c, 2).data == a[2].data);
  c.seed = 43;
  CHECK(synth::synth_generate(c)[0].data != a[0].data);
}

TEST_CASE("noise rows have the configured rms and no trend") {
  synth::SyntheticConfig c;
  c.n_subjects = 1;
  c.trials_per_subject = 30;
  c.p300_amplitude = 0;
  c.noise_amplitude = 2.5;
  const EpochSet s = synth::synth_subject(c, 0);
  for (std::size_t t = 0; t < s.n_trials; ++t)
    for (std::size_t ch = 0; ch < s.channels; ++ch) {
      const auto row = s.row(t, ch);
      double mean = 0, sq = 0;
      for (double v : row) mean += v;
      mean /= row.size();
      for (double v : row) sq += v * v;
      CHECK(std::abs(mean) < 1e-9);
      CHECK(std::sqrt(sq / row.size()) == doctest::Approx(2.5).epsilon(1e-9));
    }
}

TEST_CASE("ensemble-average difference peaks at the configured latency") {
  synth::SyntheticConfig c;
  c.n_subjects = 1;
  c.trials_per_subject = 1200;
  c.p300_amplitude = 2.0;
  c.noise_amplitude = 1.0;
  c.latency_jitter_ms = 0;
  const EpochSet s = synth::synth_subject(c, 0);
  const std::size_t ch = s.channels - 1;
  std::vector<double> diff(s.samples, 0.0);
  for (std::size_t t = 0; t < s.n_trials; ++t) {
    const double w = s.labels[t] ? 1.0 / s.positives() : -1.0 / s.negatives();
    const auto row = s.row(t, ch);
    for (std::size_t k = 0; k < s.samples; ++k) diff[k] += w * row[k];
  }
  const auto peak = static_cast<double>(std::max_element(diff.begin(), diff.end()) - diff.begin());
  const double expected = c.p300_latency_ms * c.sample_rate_hz / 1000.0;
  CHECK(std::abs(peak - expected) <= 3.0);
}

TEST_CASE("channel profile and validation") {
  const auto p = synth::channel_profile(6);
  CHECK(p.front() == doctest::Approx(0.4));
  CHECK(p.back() == doctest::Approx(1.0));
  for (std::size_t i = 1; i < p.size(); ++i) CHECK(p[i] > p[i - 1]);

  synth::SyntheticConfig c;
  CHECK_NOTHROW(c.validate());
  c.target_ratio = 1.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.p300_amplitude = -1;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.p300_latency_ms = 790;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.n_subjects = 0;
  CHECK_THROWS_AS(c.validate(), Error);
}

}  // TEST_SUITE
