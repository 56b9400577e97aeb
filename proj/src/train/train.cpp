#include "p300/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "p300/error.hpp"

namespace p300::train {

void TrainConfig::validate() const {
  auto check = [](bool ok, const std::string& message) {
    if (!(ok)) fail(ErrorCode::invalid_argument, message);
  };
  check(max_epochs >= 1, "max_epochs must be >= 1");
  check(patience >= 1 && patience <= max_epochs, "patience must be in [1, max_epochs]");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(learning_rate > 0.0 && std::isfinite(learning_rate), "learning_rate must be positive");
  check(beta1 >= 0.0 && beta1 < 1.0, "beta1 must be in [0, 1)");
  check(beta2 >= 0.0 && beta2 < 1.0, "beta2 must be in [0, 1)");
  check(epsilon > 0.0, "epsilon must be positive");
}

LossGrad bce_loss(double y_hat, int y) {
  const double p = std::clamp(y_hat, kProbabilityClamp, 1.0 - kProbabilityClamp);
  if (y == 1) return {-std::log(p), -1.0 / p};
  return {-std::log(1.0 - p), 1.0 / (1.0 - p)};
}

double cce_loss(std::span<const double> probs, int label, std::span<double> grad) {
  if (!(label >= 0 && static_cast<std::size_t>(label) < probs.size())) fail(ErrorCode::invalid_argument, "class label out of range");
  if (!(grad.size() == probs.size())) fail(ErrorCode::shape, "loss gradient size mismatch");
  std::fill(grad.begin(), grad.end(), 0.0);
  const double p = std::clamp(probs[static_cast<std::size_t>(label)], kProbabilityClamp,
                              1.0 - kProbabilityClamp);
  grad[static_cast<std::size_t>(label)] = -1.0 / p;
  return -std::log(p);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& adam,
               const TrainConfig& config) {
  if (!(grads.size() == params.size() && adam.m.size() == params.size() &&
              adam.v.size() == params.size())) fail(ErrorCode::shape, "optimizer buffers do not match the parameter count");
  for (std::size_t i = 0; i < grads.size(); ++i)
    if (!(std::isfinite(grads[i]))) fail(ErrorCode::numeric, "non-finite gradient at parameter " + std::to_string(i) + " (step " +
                std::to_string(adam.t + 1) + ")");

  ++adam.t;
  const double t = static_cast<double>(adam.t);
  const double correction1 = 1.0 - std::pow(config.beta1, t);
  const double correction2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    adam.m[i] = config.beta1 * adam.m[i] + (1.0 - config.beta1) * grads[i];
    adam.v[i] = config.beta2 * adam.v[i] + (1.0 - config.beta2) * grads[i] * grads[i];
    const double m_hat = adam.m[i] / correction1;
    const double v_hat = adam.v[i] / correction2;
    params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void adam_step(nn::ModelState& state, AdamState& adam, const TrainConfig& config) {
  adam_step(state.params, state.grads, adam, config);
}

TrainHistory fit(const TrainConfig& config, const FitHooks& hooks) {
  config.validate();
  TrainHistory history;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double train_loss = hooks.train_epoch(epoch);
    const double val_loss = hooks.validate();
    history.epochs.push_back({epoch, train_loss, val_loss});
    if (val_loss < history.best_val_loss) {
      history.best_val_loss = val_loss;
      history.best_epoch = epoch;
      since_best = 0;
      if (hooks.save_best) hooks.save_best();
      continue;
    }
    ++since_best;
    if (!std::isfinite(val_loss) || since_best >= config.patience) {
      history.stopped_early = epoch < config.max_epochs;
      break;
    }
  }
  if (history.best_epoch > 0 && hooks.restore_best) hooks.restore_best();
  return history;
}

LossKind loss_for(const nn::Model& model, const TrainConfig& config) {
  const LossKind natural = model.head() == nn::Head::sigmoid ? LossKind::binary_cross_entropy
                                                             : LossKind::categorical_cross_entropy;
  if (!(!config.loss || *config.loss == natural)) fail(ErrorCode::invalid_argument, "loss does not match the model head (sigmoid needs binary cross-entropy, softmax "
          "needs categorical cross-entropy)");
  return natural;
}

namespace {

// Loss of one output and its gradient, written into `grad`.
double sample_loss(std::span<const double> out, int label, LossKind loss, std::span<double> grad) {
  if (loss == LossKind::binary_cross_entropy) {
    const LossGrad lg = bce_loss(out[0], label);
    grad[0] = lg.grad;
    return lg.loss;
  }
  return cce_loss(out, label, grad);
}

void check_set(const nn::Model& model, const EpochSet& set, const char* what) {
  if (!(set.n_trials > 0)) fail(ErrorCode::invalid_argument, std::string(what) + " set is empty");
  if (!(set.channels == model.spec().channels && set.samples == model.spec().samples)) fail(ErrorCode::shape, std::string(what) + " set is " + std::to_string(set.channels) + "x" +
              std::to_string(set.samples) + ", architecture expects " +
              std::to_string(model.spec().channels) + "x" + std::to_string(model.spec().samples));
}

}  // namespace

double evaluate_loss(nn::Model& model, const EpochSet& set, LossKind loss) {
  std::vector<double> grad(model.output_size());
  double total = 0.0;
  for (std::size_t i = 0; i < set.n_trials; ++i)
    total += sample_loss(model.predict(set.trial(i)), set.labels[i], loss, grad);
  return total / static_cast<double>(set.n_trials);
}

std::vector<double> predict_scores(nn::Model& model, const EpochSet& set) {
  std::vector<double> scores(set.n_trials);
  for (std::size_t i = 0; i < set.n_trials; ++i) scores[i] = model.score(set.trial(i));
  return scores;
}

TrainResult train_model(const nn::ArchitectureSpec& spec, const EpochSet& train_set,
                        const EpochSet& val_set, const TrainConfig& config) {
  config.validate();
  nn::Model model(spec, derive_seed(config.seed, 0));
  check_set(model, train_set, "training");
  check_set(model, val_set, "validation");
  const LossKind loss = loss_for(model, config);

  Rng dropout_rng(derive_seed(config.seed, 1));
  Rng shuffle_rng(derive_seed(config.seed, 2));
  AdamState adam(model.state().size());
  std::vector<std::size_t> order(train_set.n_trials);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> grad(model.output_size());
  std::vector<double> best_params = model.state().params;

  FitHooks hooks;
  hooks.train_epoch = [&](std::size_t) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double scale = 1.0 / static_cast<double>(end - start);
      model.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const auto out = model.forward(train_set.trial(i), true, dropout_rng);
        total += sample_loss(out, train_set.labels[i], loss, grad);
        for (double& g : grad) g *= scale;
        model.backward(grad, false);
      }
      adam_step(model.state(), adam, config);
    }
    return total / static_cast<double>(order.size());
  };
  hooks.validate = [&] { return evaluate_loss(model, val_set, loss); };
  hooks.save_best = [&] { best_params = model.state().params; };
  hooks.restore_best = [&] { model.state().params = best_params; };

  TrainHistory history = fit(config, hooks);
  return {std::move(model), std::move(history)};
}

void write_history_csv(std::ostream& out, const TrainHistory& history) {
  out << "epoch,train_loss,val_loss\n";
  const auto old_precision = out.precision(17);
  for (const EpochRecord& r : history.epochs)
    out << r.epoch << ',' << r.train_loss << ',' << r.val_loss << '\n';
  out.precision(old_precision);
}

}  // namespace p300::train
