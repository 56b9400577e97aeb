#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "p300/nn/architecture.hpp"
#include "p300/rng.hpp"

namespace p300::nn {

struct ParamBlock {
  std::string name;  // e.g. "dense_1/kernel"
  std::size_t layer = 0;
  std::size_t offset = 0;
  Shape shape;

  std::size_t size() const;
};

// Flat parameter and gradient buffers with per-block views.
struct ModelState {
  std::vector<double> params;
  std::vector<double> grads;
  std::vector<ParamBlock> blocks;
  std::uint64_t seed = 0;

  std::size_t size() const { return params.size(); }
  std::span<double> block(std::size_t i);
  std::span<const double> block(std::size_t i) const;
  std::span<double> grad_block(std::size_t i);
  std::span<const double> grad_block(std::size_t i) const;
};

enum class Head { sigmoid, softmax };

// A trainable network. Supports the layers that have backward passes:
// ZeroPad1D, valid Conv1D and SeparableConv1D, Dense on flat input, Flatten,
// Reshape, Activation and Dropout. Anything else is Error(analysis_only).
// The network must end in a sigmoid over one unit or a softmax over two.
class Model {
 public:
  // Glorot-uniform weights and zero biases drawn from `seed`.
  Model(ArchitectureSpec spec, std::uint64_t seed);

  const ArchitectureSpec& spec() const { return spec_; }
  ModelState& state() { return state_; }
  const ModelState& state() const { return state_; }
  Head head() const { return head_; }
  std::size_t output_size() const { return head_ == Head::sigmoid ? 1 : 2; }

  // Output shape of every spec layer as produced by the forward pass.
  const std::vector<Shape>& layer_shapes() const { return spec_shapes_; }

  // `trial` is channel-major (channels x samples). Training mode applies
  // dropout with masks drawn from `dropout_rng`.
  std::span<const double> forward(std::span<const double> trial, bool training, Rng& dropout_rng);
  std::span<const double> predict(std::span<const double> trial);
  // Probability of the target class.
  double score(std::span<const double> trial);

  // Back-propagates dL/d(output) through the last forward pass, adding the
  // parameter gradients into state().grads. Training skips the input gradient.
  void backward(std::span<const double> output_grad, bool with_input_grad = true);
  // dL/d(trial) from the last backward pass that computed it, channel-major.
  std::span<const double> input_grad() const { return input_grad_; }

  void zero_grad();

 private:
  enum class OpKind { pad, conv, sepconv, dense, activation, dropout };

  struct Op {
    explicit Op(OpKind k) : kind(k) {}
    OpKind kind;
    std::size_t spec_layer = 0;
    std::size_t in_rows = 0, in_cols = 0;  // (length, channels) for sequence ops
    std::size_t pad_left = 0;
    std::size_t kernel = 0, stride = 1, filters = 0;
    std::size_t weights = 0, extra = 0, bias = 0;  // offsets into params
    bool has_bias = false;
    ActivationFn fn;
    std::size_t last_axis = 0;
    double rate = 0.0;
    std::vector<double> cache;  // depthwise output or dropout mask
  };

  std::size_t add_block(const std::string& name, std::size_t layer, Shape shape);

  ArchitectureSpec spec_;
  ModelState state_;
  Head head_ = Head::sigmoid;
  std::vector<Shape> spec_shapes_;
  std::vector<Op> ops_;
  std::size_t first_param_op_ = 0;
  std::vector<std::vector<double>> acts_;
  std::vector<std::vector<double>> grads_;
  std::vector<double> input_grad_;
  Rng inference_rng_{0};
};

}  // namespace p300::nn
