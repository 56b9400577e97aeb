#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "p300/epochs.hpp"
#include "p300/nn/model.hpp"

namespace p300::train {

enum class LossKind { binary_cross_entropy, categorical_cross_entropy };

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t patience = 50;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  // Defaults to the loss matching the model head.
  std::optional<LossKind> loss;

  // Throws Error(invalid_argument) on out-of-range fields.
  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-12;

struct LossGrad {
  double loss = 0.0;
  double grad = 0.0;  // dloss / dy_hat
};

LossGrad bce_loss(double y_hat, int y);
// Cross-entropy of a probability vector against class `label`; writes
// dloss/dprobs into `grad`.
double cce_loss(std::span<const double> probs, int label, std::span<double> grad);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(std::size_t size) : m(size, 0.0), v(size, 0.0) {}
};

// One bias-corrected Adam update. A non-finite gradient throws
// Error(numeric) naming the first offending parameter and leaves the
// parameters untouched.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& adam,
               const TrainConfig& config);
void adam_step(nn::ModelState& state, AdamState& adam, const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;

  std::size_t epochs_ran() const { return epochs.size(); }
};

// Model-agnostic epoch loop with early stopping. `train_epoch(e)` runs epoch
// e and returns its training loss; `validate()` returns the validation loss;
// `save_best()` is called on every strict improvement and `restore_best()`
// once at the end when some epoch improved.
struct FitHooks {
  std::function<double(std::size_t)> train_epoch;
  std::function<double()> validate;
  std::function<void()> save_best;
  std::function<void()> restore_best;
};

TrainHistory fit(const TrainConfig& config, const FitHooks& hooks);

LossKind loss_for(const nn::Model& model, const TrainConfig& config);

// Mean loss over a set in inference mode.
double evaluate_loss(nn::Model& model, const EpochSet& set, LossKind loss);
std::vector<double> predict_scores(nn::Model& model, const EpochSet& set);

struct TrainResult {
  nn::Model model;
  TrainHistory history;
};

// Mini-batch Adam with per-epoch seeded shuffling; returns the weights of
// the best validation epoch.
TrainResult train_model(const nn::ArchitectureSpec& spec, const EpochSet& train_set,
                        const EpochSet& val_set, const TrainConfig& config);

void write_history_csv(std::ostream& out, const TrainHistory& history);

}  // namespace p300::train
