#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "p300/epochs.hpp"
#include "p300/nn/architecture.hpp"
#include "p300/rng.hpp"
#include "p300/train.hpp"

namespace p300::eval {

// Mann-Whitney AUC: mean over (positive, negative) pairs of 1 / 0.5 / 0 for
// greater / tied / smaller scores. Throws unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// k disjoint folds covering every index, each class dealt round-robin after a
// seeded shuffle so per-class fold sizes differ by at most one.
std::vector<std::vector<std::size_t>> stratified_kfold(std::span<const std::uint8_t> labels,
                                                       std::size_t k, Rng& rng);

enum class Protocol { within, cross };
std::string_view to_string(Protocol protocol);

struct EvalRecord {
  std::size_t subject = 0;
  std::size_t repetition = 0;
  std::size_t fold = 0;
  double auc = 0.0;
  std::size_t epochs = 0;
  double train_seconds = 0.0;
  double inference_seconds = 0.0;
};

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population
};

Aggregate aggregate(std::span<const double> values);

struct EvalReport {
  Protocol protocol = Protocol::within;
  std::string architecture;
  std::vector<std::string> subjects;  // id per subject index
  std::vector<EvalRecord> records;    // sorted by (subject, repetition, fold)

  Aggregate summary() const;
};

// Anything that can be fit on a training/validation pair and then score trials.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const EpochSet& train, const EpochSet& validation, std::uint64_t seed) = 0;
  virtual std::vector<double> score(const EpochSet& set) = 0;
  virtual std::size_t epochs_ran() const { return 0; }
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

// Trains the architecture with `config` (its seed replaced per run).
ClassifierFactory network_classifier(nn::ArchitectureSpec spec, train::TrainConfig config);

// Scores every trial identically.
class ConstantClassifier : public Classifier {
 public:
  explicit ConstantClassifier(double value = 0.5) : value_(value) {}
  void fit(const EpochSet&, const EpochSet&, std::uint64_t) override {}
  std::vector<double> score(const EpochSet& set) override {
    return std::vector<double>(set.n_trials, value_);
  }

 private:
  double value_;
};

struct ProtocolOptions {
  std::size_t repetitions = 10;
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  // Standardize channels with statistics from each run's training split.
  bool standardize = true;
  std::string architecture;
};

// Seed of the training run for (fold, repetition).
std::uint64_t run_seed(std::uint64_t base, std::size_t fold, std::size_t repetition);

// For each repetition, a fresh stratified k-fold split; each fold is in turn
// the held-out set that drives early stopping and is scored.
EvalReport run_within_subject(const ClassifierFactory& factory, std::span<const EpochSet> subjects,
                              const ProtocolOptions& options);

struct CrossSplit {
  std::size_t test;
  std::size_t validation;
  std::vector<std::size_t> train;
};

// Test subject i, validation subject (i + 1) mod n, the rest for training.
std::vector<CrossSplit> cross_subject_splits(std::size_t n_subjects);

EvalReport run_cross_subject(const ClassifierFactory& factory, std::span<const EpochSet> subjects,
                             const ProtocolOptions& options);

// Runs tasks 0..count-1 on up to `jobs` threads. Rethrows the first failure
// in task order after every worker has stopped.
void parallel_for(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

// CSV columns subject,repetition,fold,auc,epochs,train_s,infer_s. Timing
// columns hold NA unless `timing` is set, which keeps reports byte-stable.
void write_report_csv(std::ostream& out, const EvalReport& report, bool timing = false);
void write_summary_json(std::ostream& out, const EvalReport& report);

}  // namespace p300::eval
