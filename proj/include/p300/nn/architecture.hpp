#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace p300::nn {

enum class ActivationKind { linear, log, square, sigmoid, tanh, stanh, softmax, relu, elu };

struct ActivationFn {
  ActivationKind kind = ActivationKind::linear;
  double elu_alpha = 1.0;  // saturation value of elu for negative inputs

  friend bool operator==(const ActivationFn&, const ActivationFn&) = default;
};

enum class Padding { valid, same };

// Layer vocabulary. One-dimensional layers see (length, channels) tensors;
// two-dimensional layers see channels-first (channels, height, width).

struct ZeroPad1D {
  std::size_t left = 0;
  std::size_t right = 0;
  friend bool operator==(const ZeroPad1D&, const ZeroPad1D&) = default;
};

struct Conv1D {
  std::size_t filters = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  Padding padding = Padding::valid;
  bool use_bias = true;
  std::optional<ActivationFn> activation;
  friend bool operator==(const Conv1D&, const Conv1D&) = default;
};

// Depthwise stage (no bias) followed by a pointwise stage carrying the bias.
struct SeparableConv1D {
  std::size_t filters = 1;
  std::size_t kernel = 1;
  std::size_t stride = 1;
  std::size_t depth_multiplier = 1;
  Padding padding = Padding::valid;
  bool use_bias = true;
  std::optional<ActivationFn> activation;
  friend bool operator==(const SeparableConv1D&, const SeparableConv1D&) = default;
};

struct Conv2D {
  std::size_t filters = 1;
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  Padding padding = Padding::valid;
  bool use_bias = true;
  std::optional<ActivationFn> activation;
  friend bool operator==(const Conv2D&, const Conv2D&) = default;
};

struct DepthwiseConv2D {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t depth_multiplier = 1;
  Padding padding = Padding::valid;
  bool use_bias = true;
  std::optional<ActivationFn> activation;
  friend bool operator==(const DepthwiseConv2D&, const DepthwiseConv2D&) = default;
};

struct SeparableConv2D {
  std::size_t filters = 1;
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t stride_h = 1, stride_w = 1;
  std::size_t depth_multiplier = 1;
  Padding padding = Padding::valid;
  bool use_bias = true;
  std::optional<ActivationFn> activation;
  friend bool operator==(const SeparableConv2D&, const SeparableConv2D&) = default;
};

struct Dense {
  std::size_t units = 1;
  bool use_bias = true;
  std::optional<ActivationFn> activation;
  friend bool operator==(const Dense&, const Dense&) = default;
};

struct Flatten {
  friend bool operator==(const Flatten&, const Flatten&) = default;
};

struct Reshape {
  std::vector<std::size_t> dims;
  friend bool operator==(const Reshape&, const Reshape&) = default;
};

struct Activation {
  ActivationFn fn;
  friend bool operator==(const Activation&, const Activation&) = default;
};

struct Dropout {
  double rate = 0.5;
  friend bool operator==(const Dropout&, const Dropout&) = default;
};

struct BatchNorm {
  friend bool operator==(const BatchNorm&, const BatchNorm&) = default;
};

// Pools over length for (length, channels) inputs (pool_h/stride_h unused),
// over (height, width) for channels-first 3-D inputs. Stride 0 means "= pool".
struct MaxPool {
  std::size_t pool_h = 1, pool_w = 2;
  std::size_t stride_h = 0, stride_w = 0;
  friend bool operator==(const MaxPool&, const MaxPool&) = default;
};

struct AveragePool {
  std::size_t pool_h = 1, pool_w = 2;
  std::size_t stride_h = 0, stride_w = 0;
  friend bool operator==(const AveragePool&, const AveragePool&) = default;
};

using LayerSpec = std::variant<ZeroPad1D, Conv1D, SeparableConv1D, Conv2D, DepthwiseConv2D,
                               SeparableConv2D, Dense, Flatten, Reshape, Activation, Dropout,
                               BatchNorm, MaxPool, AveragePool>;

using Shape = std::vector<std::size_t>;

// Ordered layer list for an input of `channels` x `samples`. Layers receive
// the trial time-major, i.e. as a (samples, channels) tensor.
struct ArchitectureSpec {
  std::string name;
  std::size_t channels = 0;
  std::size_t samples = 0;
  std::vector<LayerSpec> layers;

  Shape input_shape() const { return {samples, channels}; }
  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

std::string_view to_string(ActivationKind kind);
ActivationKind parse_activation_kind(std::string_view name);

// Keras-style display name ("SeparableConv1D", "Dense", ...).
std::string_view layer_name(const LayerSpec& layer);
// Keyword used in the text format ("separableconv1d", "dense", ...).
std::string_view layer_keyword(const LayerSpec& layer);

// Text format: an `architecture name=... channels=... samples=...` header
// line, then one `kind key=value ...` line per layer. '#' starts a comment.
std::string to_text(const ArchitectureSpec& spec);
ArchitectureSpec parse_architecture(std::string_view text);

std::string format_shape(const Shape& shape);

}  // namespace p300::nn
