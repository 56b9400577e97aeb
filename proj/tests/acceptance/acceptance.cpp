// Acceptance criteria 1-10. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Arguments select criteria by number; none runs all.
// Set P300_ACCEPTANCE_FULL=1 to run the learning criteria on the whole cohort
// with every repetition instead of the three-subject subsample.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "p300/complexity.hpp"
#include "p300/error.hpp"
#include "p300/eval.hpp"
#include "p300/nn/model.hpp"
#include "p300/nn/ops.hpp"
#include "p300/signal.hpp"
#include "p300/synth.hpp"
#include "p300/train.hpp"

namespace fs = std::filesystem;
using namespace p300;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = "failed: " + what;
      pass = false;
    }
  }
};

bool full_run() {
  const char* v = std::getenv("P300_ACCEPTANCE_FULL");
  return v && std::string(v) == "1";
}

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::vector<std::vector<std::string>> read_csv(const std::string& file) {
  std::ifstream in(std::string(P300_GOLDEN_DIR) + "/" + file);
  if (!in) throw Error(ErrorCode::io, "missing golden file " + file);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::istringstream row(line);
    for (std::string cell; std::getline(row, cell, ',');) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "p300");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---- 1 ----------------------------------------------------------------------

Outcome parameter_counts() {
  Outcome o;
  const std::set<std::string> exact{"cnn1", "ucnn1", "cnn3", "ucnn3", "cnnr", "oclnn", "fcnn", "sepconv1d"};
  std::map<std::string, std::vector<std::uint64_t>> listed;
  for (const auto& row : read_csv("reference_params.csv"))
    for (std::size_t d = 0; d < 4; ++d) listed[row[0]].push_back(std::stoull(row[d + 1]));

  const auto start = Clock::now();
  std::set<std::uint64_t> matched;
  for (std::size_t d = 0; d < 4; ++d) {
    const auto& shape = complexity::kDatasetShapes[d];
    const CliResult r = cli({"analyze", "--arch", "all", "--format", "csv", "--channels",
                             std::to_string(shape.channels), "--samples", std::to_string(shape.samples)});
    o.expect(r.code == 0, "analyze exited with " + std::to_string(r.code));
    std::istringstream lines(r.out);
    for (std::string line; std::getline(lines, line);) {
      const auto comma = line.find(',');
      if (line.find(",total,,") == std::string::npos || !exact.count(line.substr(0, comma))) continue;
      const std::string name = line.substr(0, comma);
      const std::string tail = line.substr(line.find(",total,,") + 8);
      const std::uint64_t params = std::stoull(tail.substr(0, tail.find(',')));
      o.expect(params == listed.at(name)[d],
               name + " @ " + std::string(shape.name) + " gave " + std::to_string(params));
      if (params == listed.at(name)[d]) matched.insert(params);
    }
  }
  const double elapsed = seconds_since(start);
  o.expect(matched.size() == 24, "expected 24 distinct exact totals, matched " + std::to_string(matched.size()));
  for (std::uint64_t v : {1036922ull, 19848098ull, 1842ull, 2477ull, 225ull, 1361ull, 1405ull, 265ull})
    o.expect(matched.count(v) == 1, "missing " + std::to_string(v));
  o.expect(elapsed < 1.0, format("analyze took %.3f s", elapsed));

  // Batch-norm architectures: per-layer counts against the appendix listings.
  std::size_t layer_matches = 0, conflicts = 0;
  std::map<std::string, std::vector<complexity::LayerRow>> rows[2];
  for (const auto& row : read_csv("layer_params_bn.csv")) {
    const std::string& name = row[0];
    const bool running = row[4] == "running";
    auto& cache = rows[running][name];
    if (cache.empty()) {
      for (const auto& r : complexity::count_params(complexity::builtin_architecture(name, 6, 206), {running}).rows)
        if (r.params > 0) cache.push_back(r);
    }
    const std::size_t index = std::stoul(row[1]) - 1;
    o.expect(index < cache.size() && cache[index].layer == row[2], name + " row " + row[1] + " is not " + row[2]);
    if (index >= cache.size()) continue;
    const bool equal = cache[index].params == std::stoull(row[3]);
    if (row[5] == "match") {
      o.expect(equal, name + " " + row[2] + " row " + row[1] + " counted " + std::to_string(cache[index].params));
      layer_matches += equal;
    } else {
      o.expect(!equal && !row[6].empty(), name + " row " + row[1] + " is listed as a conflict but agrees");
      ++conflicts;
    }
  }

  // Every disagreement between the two published totals is in the ledger.
  std::map<std::string, std::vector<std::uint64_t>> alt;
  for (const auto& row : read_csv("reference_params_alt.csv"))
    for (std::size_t d = 0; d < 4; ++d) alt[row[0]].push_back(std::stoull(row[d + 1]));
  const auto ledger = read_csv("discrepancies.csv");
  std::size_t disagreements = 0;
  for (const auto& [name, values] : listed)
    for (std::size_t d = 0; d < 4; ++d) {
      if (values[d] == alt.at(name)[d]) continue;
      ++disagreements;
      const std::string ds = "D" + std::to_string(d + 1);
      const auto it = std::find_if(ledger.begin(), ledger.end(), [&](const auto& r) { return r[0] == name && r[1] == ds; });
      o.expect(it != ledger.end(), name + " " + ds + " missing from the discrepancy ledger");
      if (it == ledger.end()) continue;
      const auto& shape = complexity::kDatasetShapes[d];
      const auto spec = complexity::builtin_architecture(name, shape.channels, shape.samples);
      o.expect(complexity::count_params(spec).total_params == std::stoull((*it)[4]), name + " " + ds + " ledger is stale");
      o.expect(complexity::count_params(spec, {true}).total_params == std::stoull((*it)[5]), name + " " + ds + " ledger is stale");
    }
  o.expect(disagreements == ledger.size(), "discrepancy ledger has extra rows");
  if (o.pass)
    o.detail = format("%zu distinct totals exact in %.3f s; %zu batch-norm layer counts match, %zu documented conflicts, %zu ledger rows",
                      matched.size(), elapsed, layer_matches, conflicts, ledger.size());
  return o;
}

// ---- 2 ----------------------------------------------------------------------

std::string shape_text(const nn::Shape& shape) {
  std::string s;
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "x" : "") + std::to_string(shape[i]);
  return s;
}

Outcome shapes() {
  Outcome o;
  std::map<std::string, std::size_t> next;
  std::size_t checked = 0, annotated = 0;
  for (const auto& row : read_csv("published_shapes.csv")) {
    const auto report = complexity::count_params(complexity::builtin_architecture(row[0], 6, 206));
    std::size_t& i = next[row[0]];
    o.expect(i < report.rows.size(), row[0] + " has fewer layers than listed");
    if (i >= report.rows.size()) continue;
    const auto& layer = report.rows[i++];
    o.expect(layer.layer == row[1], row[0] + " layer " + layer.layer + " where " + row[1] + " is listed");
    o.expect(shape_text(layer.output) == row[3], row[0] + " " + row[1] + " output " + shape_text(layer.output));
    if (row[2] != row[3]) {
      o.expect(!row[4].empty(), row[0] + " " + row[1] + " differs from the listing without a note");
      ++annotated;
    }
    ++checked;
  }
  for (const auto& [name, count] : next)
    o.expect(count == complexity::builtin_architecture(name, 6, 206).layers.size(), name + " has unlisted layers");
  if (o.pass) o.detail = format("%zu output shapes reproduced, %zu annotated listing errors", checked, annotated);
  return o;
}

// ---- 3 ----------------------------------------------------------------------

// Central difference at x[i], or nothing when the loss has a kink inside the
// step. A ReLU input crossing zero makes the one-sided slopes disagree; the
// step shrinks once before the coordinate is given up.
std::optional<double> kink_aware_difference(std::vector<double>& x, std::size_t i, const std::function<double()>& f) {
  const double saved = x[i];
  const double mid = f();
  for (double h : {1e-5, 1e-8}) {
    x[i] = saved + h;
    const double up = f();
    x[i] = saved - h;
    const double down = f();
    x[i] = saved;
    const double forward = (up - mid) / h, backward = (mid - down) / h;
    if (std::abs(forward - backward) <= 1e-3 * std::max(std::abs(forward) + std::abs(backward), 1e-2))
      return (up - down) / (2 * h);
  }
  return std::nullopt;
}

Outcome gradients() {
  Outcome o;
  const auto start = Clock::now();
  Rng rng(20240603);
  double worst = 0.0;
  std::size_t cases = 0, checked = 0, kinks = 0;
  const char* names[] = {"sepconv1d", "fcnn", "oclnn"};
  for (int round = 0; round < 40; ++round)
    for (const char* name : names) {
      const std::size_t channels = 1 + rng.below(4);
      const std::size_t samples = std::string(name) == "oclnn" ? 15 + rng.below(31) : 8 + rng.below(33);
      nn::Model model(complexity::builtin_architecture(name, channels, samples), rng.below(1u << 30));
      auto& params = model.state().params;
      for (double& p : params) p += 0.05 * rng.normal();
      auto trial = test::normals(rng, channels * samples);
      const int label = static_cast<int>(rng.below(2));
      const std::uint64_t dropout_seed = rng.below(1u << 30);
      std::vector<double> grad(model.output_size());
      auto loss = [&] {
        Rng dropout(dropout_seed);
        const auto y = model.forward(trial, true, dropout);
        if (model.head() == nn::Head::sigmoid) return train::bce_loss(y[0], label).loss;
        return train::cce_loss(y, label, grad);
      };
      Rng dropout(dropout_seed);
      const auto y = model.forward(trial, true, dropout);
      if (model.head() == nn::Head::sigmoid)
        grad[0] = train::bce_loss(y[0], label).grad;
      else
        train::cce_loss(y, label, grad);
      model.zero_grad();
      model.backward(grad);
      const std::vector<double> analytic = model.state().grads;
      const std::vector<double> input(model.input_grad().begin(), model.input_grad().end());
      auto compare = [&](std::vector<double>& x, std::size_t i, double analytic_value) {
        const auto d = kink_aware_difference(x, i, loss);
        if (!d) {
          ++kinks;
          return;
        }
        worst = std::max(worst, test::rel_error(analytic_value, *d));
        ++checked;
      };
      for (std::size_t i = 0; i < params.size(); ++i) compare(params, i, analytic[i]);
      for (std::size_t i = 0; i < trial.size(); ++i) compare(trial, i, input[i]);
      ++cases;
    }
  const double elapsed = seconds_since(start);
  o.expect(cases >= 100, "too few cases");
  o.expect(worst < 1e-5, format("max relative error %.3g", worst));
  o.expect(elapsed < 60.0, format("took %.1f s", elapsed));
  o.expect(kinks * 1000 <= checked, format("%zu coordinates sat on a ReLU boundary", kinks));
  if (o.pass)
    o.detail = format("%zu cases, %zu gradients, max relative error %.2e, %zu excluded at ReLU boundaries, %.1f s", cases,
                      checked, worst, kinks, elapsed);
  return o;
}

// ---- 4 ----------------------------------------------------------------------

Outcome convolutions() {
  Outcome o;
  Rng rng(77);
  double worst = 0.0;
  std::size_t cases = 0;
  for (int i = 0; i < 200; ++i) {
    const std::size_t K = 1 + rng.below(8), stride = 1 + rng.below(5), C = 1 + rng.below(6), F = 1 + rng.below(6);
    const std::size_t L = K + rng.below(40);
    const auto x = test::normals(rng, L * C);
    const auto bias = test::normals(rng, F);
    if (i % 2 == 0) {
      const auto depth = test::normals(rng, K * C);
      const auto point = test::normals(rng, C * F);
      const auto y = nn::sepconv1d_forward(nn::Matrix(L, C, x), nn::Matrix(K, C, depth), nn::Matrix(C, F, point), bias, stride);
      const auto ref = test::sepconv_oracle(x, L, C, depth, K, point, F, bias, stride);
      o.expect(y.size() == ref.size(), "separable output size");
      for (std::size_t j = 0; j < ref.size() && j < y.size(); ++j) worst = std::max(worst, std::abs(y.values()[j] - ref[j]));
    } else {
      const auto w = test::normals(rng, K * C * F);
      const auto y = nn::conv1d_forward(nn::Matrix(L, C, x), w, bias, K, stride);
      const auto ref = test::conv_oracle(x, L, C, w, K, F, bias, stride);
      o.expect(y.size() == ref.size(), "convolution output size");
      for (std::size_t j = 0; j < ref.size() && j < y.size(); ++j) worst = std::max(worst, std::abs(y.values()[j] - ref[j]));
    }
    ++cases;
  }
  o.expect(worst <= 1e-12, format("max deviation %.3g", worst));
  if (o.pass) o.detail = format("%zu instances (100 separable, 100 full), max deviation %.2e", cases, worst);
  return o;
}

// ---- 5 ----------------------------------------------------------------------

Outcome auc_oracle() {
  Outcome o;
  Rng rng(5);
  std::size_t sets = 0, tie_heavy = 0;
  for (int i = 0; i < 1200; ++i) {
    const std::size_t n = 2 + rng.below(120);
    const bool ties = i % 3 == 0;
    std::vector<double> scores(n);
    std::vector<std::uint8_t> labels(n);
    for (std::size_t j = 0; j < n; ++j) {
      scores[j] = ties ? static_cast<double>(rng.below(4)) : rng.normal();
      labels[j] = rng.uniform() < 0.25;
    }
    labels[rng.below(n)] = 1;
    std::size_t neg = rng.below(n);
    while (labels[neg] == 1 && std::count(labels.begin(), labels.end(), 1) == 1) neg = rng.below(n);
    labels[neg] = 0;
    if (std::count(labels.begin(), labels.end(), 1) == 0) labels[(neg + 1) % n] = 1;
    const double got = eval::roc_auc(scores, labels);
    const double want = test::pair_count_auc(scores, labels);
    o.expect(got == want, format("set %d: %.17g vs %.17g", i, got, want));
    ++sets;
    tie_heavy += ties;
  }
  if (o.pass) o.detail = format("%zu sets (%zu tie-heavy) equal to pair counting", sets, tie_heavy);
  return o;
}

// ---- 6 ----------------------------------------------------------------------

struct CohortRun {
  double mean_auc = 0.0;
  double slowest_subject = 0.0;
};

CohortRun within_cohort(const synth::SyntheticConfig& sc, const std::vector<std::size_t>& subjects,
                        const nn::ArchitectureSpec& spec, std::size_t repetitions) {
  train::TrainConfig config;
  const auto factory = eval::network_classifier(spec, config);
  eval::ProtocolOptions options;
  options.repetitions = repetitions;
  options.seed = 42;
  options.jobs = workers();
  std::vector<double> aucs;
  CohortRun run;
  for (std::size_t s : subjects) {
    const std::vector<EpochSet> one{synth::synth_subject(sc, s)};
    const auto start = Clock::now();
    const eval::EvalReport report = eval::run_within_subject(factory, one, options);
    run.slowest_subject = std::max(run.slowest_subject, seconds_since(start));
    for (const auto& r : report.records) aucs.push_back(r.auc);
  }
  run.mean_auc = eval::aggregate(aucs).mean;
  return run;
}

std::vector<std::size_t> cohort_subset(std::size_t n_subjects) {
  std::vector<std::size_t> all(full_run() ? n_subjects : 3);
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

Outcome end_to_end() {
  Outcome o;
  const synth::SyntheticConfig sc;  // 22 subjects, 2880 trials, amplitude/noise 1, seed 42
  const auto subjects = cohort_subset(sc.n_subjects);
  const std::size_t quick_reps = full_run() ? 10 : 2;

  const auto sep = within_cohort(sc, subjects, complexity::builtin_architecture("sepconv1d", 6, 206), 10);
  const auto fcnn = within_cohort(sc, subjects, complexity::builtin_architecture("fcnn", 6, 206), quick_reps);
  synth::SyntheticConfig null_cfg = sc;
  null_cfg.p300_amplitude = 0.0;
  const auto null = within_cohort(null_cfg, subjects, complexity::builtin_architecture("sepconv1d", 6, 206), quick_reps);

  o.expect(sep.mean_auc >= 0.90, format("sepconv1d mean AUC %.4f", sep.mean_auc));
  o.expect(fcnn.mean_auc >= 0.85, format("fcnn mean AUC %.4f", fcnn.mean_auc));
  o.expect(null.mean_auc >= 0.45 && null.mean_auc <= 0.55, format("null mean AUC %.4f", null.mean_auc));
  o.expect(sep.slowest_subject < 300.0, format("a 10x5 sepconv1d subject took %.1f s", sep.slowest_subject));
  if (o.pass)
    o.detail = format("%zu subjects: sepconv1d %.4f (10x5), fcnn %.4f (%zux5), null %.4f (%zux5); 10x5 subject in %.1f s",
                      subjects.size(), sep.mean_auc, fcnn.mean_auc, quick_reps, null.mean_auc, quick_reps,
                      sep.slowest_subject);
  return o;
}

// ---- 7 ----------------------------------------------------------------------

Outcome protocol_arithmetic() {
  Outcome o;
  const auto constant = [] { return std::make_unique<eval::ConstantClassifier>(); };
  synth::SyntheticConfig one;
  one.n_subjects = 1;
  const std::vector<EpochSet> subject{synth::synth_subject(one, 0)};
  eval::ProtocolOptions options;
  const auto within = eval::run_within_subject(constant, subject, options);
  o.expect(within.records.size() == 50, "within-subject records: " + std::to_string(within.records.size()));

  for (std::size_t n : {22u, 8u}) {
    synth::SyntheticConfig sc;
    sc.n_subjects = n;
    sc.trials_per_subject = 60;
    const auto cohort = synth::synth_generate(sc);
    const auto cross = eval::run_cross_subject(constant, cohort, options);
    o.expect(cross.records.size() == n, "cross-subject folds for " + std::to_string(n));
    std::set<std::size_t> tested;
    for (const auto& r : cross.records) tested.insert(r.subject);
    o.expect(tested.size() == n, "each subject tested once");
  }

  std::vector<std::uint8_t> labels(480, 1);
  labels.resize(2880, 0);
  Rng rng(1);
  for (const auto& fold : eval::stratified_kfold(labels, 5, rng)) {
    std::size_t pos = 0;
    for (std::size_t i : fold) pos += labels[i];
    o.expect(pos == 96 && fold.size() - pos == 480, "fold composition");
  }
  if (o.pass) o.detail = "50 within-subject records; 22 and 8 cross-subject folds; 96/480 per fold";
  return o;
}

// ---- 8 ----------------------------------------------------------------------

Outcome determinism() {
  Outcome o;
  const fs::path dir = fs::temp_directory_path() / "p300_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  o.expect(cli({"synth", "--subjects", "1", "--trials", "300", "--seed", "11", "--out", (dir / "data").string()}).code == 0,
           "synth failed");
  auto eval_run = [&](const std::string& prefix) {
    return cli({"eval-within", "--in", (dir / "data" / "S01.epo").string(), "--repetitions", "2", "--epochs", "20",
                "--patience", "5", "--seed", "5", "--jobs", "2", "--out", (dir / prefix).string()});
  };
  const CliResult a = eval_run("a"), b = eval_run("b");
  o.expect(a.code == 0 && b.code == 0, "eval-within failed: " + a.err + b.err);
  const std::string csv_a = slurp(dir / "a.csv"), csv_b = slurp(dir / "b.csv");
  o.expect(!csv_a.empty() && csv_a == csv_b, "report CSVs differ");
  o.expect(slurp(dir / "a.json") == slurp(dir / "b.json"), "summary JSON differs");
  if (o.pass) o.detail = format("two runs produced identical %zu-byte report CSVs", csv_a.size());
  fs::remove_all(dir);
  return o;
}

// ---- 9 ----------------------------------------------------------------------

Outcome filter_properties() {
  Outcome o;
  const auto f = signal::design_butterworth_bandpass(4, 0.1, 12.0, 256.0);
  const double edge = 1.0 / std::sqrt(2.0);
  const double lo = std::abs(f.response(0.1)), hi = std::abs(f.response(12.0));
  const double dc = std::abs(f.response(0.0)), nyquist = std::abs(f.response(128.0));
  double max_pole = 0.0;
  for (const auto& p : f.poles()) max_pole = std::max(max_pole, std::abs(p));
  o.expect(std::abs(lo - edge) <= 1e-6, format("|H(0.1 Hz)| = %.9f", lo));
  o.expect(std::abs(hi - edge) <= 1e-6, format("|H(12 Hz)| = %.9f", hi));
  o.expect(dc < 1e-9, format("|H(DC)| = %.3g", dc));
  o.expect(max_pole < 1.0, format("max pole magnitude %.12f", max_pole));
  o.expect(f.poles().size() == 8, "a 4th-order bandpass has 8 poles");
  if (o.pass)
    o.detail = format("|H| %.9f / %.9f at the edges, |H(DC)| %.1e, |H(Nyquist)| %.1e, max |pole| %.9f", lo, hi, dc,
                      nyquist, max_pole);
  return o;
}

// ---- 10 ---------------------------------------------------------------------

Outcome filter_sweep() {
  Outcome o;
  const synth::SyntheticConfig sc;
  const auto subjects = cohort_subset(sc.n_subjects);
  const std::size_t reps = full_run() ? 10 : 1;
  std::vector<std::pair<std::size_t, double>> means;
  for (std::size_t filters : {4u, 8u, 16u, 32u}) {
    complexity::BuiltinOptions b;
    b.sepconv_filters = filters;
    means.emplace_back(filters, within_cohort(sc, subjects, complexity::builtin_architecture("sepconv1d", 6, 206, b), reps).mean_auc);
  }
  double spread = 0.0;
  for (const auto& [fa, a] : means)
    for (const auto& [fb, b] : means) spread = std::max(spread, std::abs(a - b));
  o.expect(spread < 0.03, format("largest pairwise gap %.4f", spread));
  std::string detail = format("%zu subjects, %zux5:", subjects.size(), reps);
  for (const auto& [f, m] : means) detail += format(" %zu->%.4f", f, m);
  if (o.pass) o.detail = detail + format("; largest gap %.4f", spread);
  return o;
}

struct Criterion {
  int number;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "parameter-count reproduction", parameter_counts},
      {2, "shape reproduction", shapes},
      {3, "gradient correctness", gradients},
      {4, "convolution oracle equivalence", convolutions},
      {5, "AUC oracle equivalence", auc_oracle},
      {6, "end-to-end learning", end_to_end},
      {7, "protocol arithmetic", protocol_arithmetic},
      {8, "determinism", determinism},
      {9, "filter properties", filter_properties},
      {10, "filter-count sweep", filter_sweep},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (!selected.empty() && !selected.count(c.number)) continue;
    Outcome outcome;
    const auto start = Clock::now();
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("error: ") + e.what();
    }
    failures += !outcome.pass;
    std::printf("criterion %d %s %s: %s [%.1f s]\n", c.number, outcome.pass ? "PASS" : "FAIL", c.title,
                outcome.detail.c_str(), seconds_since(start));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
