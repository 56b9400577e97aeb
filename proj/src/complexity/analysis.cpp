#include <functional>
#include <numeric>
#include <variant>

#include "p300/complexity.hpp"
#include "p300/error.hpp"

namespace p300::complexity {
namespace {

using namespace p300::nn;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

struct LayerCost {
  Shape output;
  std::uint64_t params = 0;
  std::uint64_t bn_stats = 0;  // non-trainable running statistics
  std::uint64_t flops = 0;
};

std::uint64_t elements(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::uint64_t{1}, std::multiplies<>());
}

class LayerAnalyzer {
 public:
  LayerAnalyzer(std::size_t index, const LayerSpec& layer, const Shape& in)
      : index_(index), layer_(layer), in_(in) {}

  LayerCost operator()(const ZeroPad1D& l) const {
    rank(2);
    return {{in_[0] + l.left + l.right, in_[1]}, 0, 0, 0};
  }

  LayerCost operator()(const Conv1D& l) const {
    rank(2);
    positive(l.filters, "filters");
    const std::size_t p = positions(in_[0], l.kernel, l.stride, l.padding);
    const std::uint64_t c = in_[1];
    LayerCost cost{{p, l.filters}, l.kernel * c * l.filters + (l.use_bias ? l.filters : 0), 0,
                   2ull * p * l.kernel * c * l.filters};
    return activated(cost, l.activation);
  }

  LayerCost operator()(const SeparableConv1D& l) const {
    rank(2);
    positive(l.filters, "filters");
    positive(l.depth_multiplier, "depth_multiplier");
    const std::size_t p = positions(in_[0], l.kernel, l.stride, l.padding);
    const std::uint64_t c = in_[1];
    const std::uint64_t mid = c * l.depth_multiplier;
    LayerCost cost{{p, l.filters},
                   l.kernel * mid + mid * l.filters + (l.use_bias ? l.filters : 0), 0,
                   2ull * p * (l.kernel * mid + mid * l.filters)};
    return activated(cost, l.activation);
  }

  LayerCost operator()(const Conv2D& l) const {
    rank(3);
    positive(l.filters, "filters");
    const std::size_t h = positions(in_[1], l.kernel_h, l.stride_h, l.padding);
    const std::size_t w = positions(in_[2], l.kernel_w, l.stride_w, l.padding);
    const std::uint64_t c = in_[0];
    LayerCost cost{{l.filters, h, w},
                   l.kernel_h * l.kernel_w * c * l.filters + (l.use_bias ? l.filters : 0), 0,
                   2ull * h * w * l.kernel_h * l.kernel_w * c * l.filters};
    return activated(cost, l.activation);
  }

  LayerCost operator()(const DepthwiseConv2D& l) const {
    rank(3);
    positive(l.depth_multiplier, "depth_multiplier");
    const std::size_t h = positions(in_[1], l.kernel_h, l.stride_h, l.padding);
    const std::size_t w = positions(in_[2], l.kernel_w, l.stride_w, l.padding);
    const std::uint64_t out_c = in_[0] * l.depth_multiplier;
    LayerCost cost{{out_c, h, w}, l.kernel_h * l.kernel_w * out_c + (l.use_bias ? out_c : 0), 0,
                   2ull * h * w * l.kernel_h * l.kernel_w * out_c};
    return activated(cost, l.activation);
  }

  LayerCost operator()(const SeparableConv2D& l) const {
    rank(3);
    positive(l.filters, "filters");
    positive(l.depth_multiplier, "depth_multiplier");
    const std::size_t h = positions(in_[1], l.kernel_h, l.stride_h, l.padding);
    const std::size_t w = positions(in_[2], l.kernel_w, l.stride_w, l.padding);
    const std::uint64_t mid = in_[0] * l.depth_multiplier;
    LayerCost cost{{l.filters, h, w},
                   l.kernel_h * l.kernel_w * mid + mid * l.filters + (l.use_bias ? l.filters : 0), 0,
                   2ull * h * w * (l.kernel_h * l.kernel_w * mid + mid * l.filters)};
    return activated(cost, l.activation);
  }

  LayerCost operator()(const Dense& l) const {
    rank(1);
    positive(l.units, "units");
    if (in_[0] == 0) error("dense input has zero width");
    const std::uint64_t d = in_[0];
    LayerCost cost{{l.units}, d * l.units + (l.use_bias ? l.units : 0), 0, 2ull * d * l.units};
    return activated(cost, l.activation);
  }

  LayerCost operator()(const Flatten&) const {
    return {{static_cast<std::size_t>(elements(in_))}, 0, 0, 0};
  }

  LayerCost operator()(const Reshape& l) const {
    if (l.dims.empty() || elements(l.dims) != elements(in_))
      error("cannot reshape " + format_shape(in_) + " to " + format_shape(l.dims));
    return {l.dims, 0, 0, 0};
  }

  LayerCost operator()(const Activation& l) const {
    if (l.fn.kind == ActivationKind::linear) return {in_, 0, 0, 0};
    return {in_, 0, 0, elements(in_)};
  }

  LayerCost operator()(const Dropout& l) const {
    if (!(l.rate >= 0.0 && l.rate < 1.0)) error("dropout rate must be in [0, 1)");
    return {in_, 0, 0, 0};
  }

  LayerCost operator()(const BatchNorm&) const {
    std::uint64_t channels = 0;
    switch (in_.size()) {
      case 1: channels = in_[0]; break;
      case 2: channels = in_[1]; break;  // (length, channels)
      case 3: channels = in_[0]; break;  // channels first
      default: error("batch norm expects a rank 1-3 input");
    }
    return {in_, 2 * channels, 2 * channels, 2 * elements(in_)};
  }

  LayerCost operator()(const MaxPool& l) const { return pool(l.pool_h, l.pool_w, l.stride_h, l.stride_w); }
  LayerCost operator()(const AveragePool& l) const {
    return pool(l.pool_h, l.pool_w, l.stride_h, l.stride_w);
  }

 private:
  LayerCost pool(std::size_t ph, std::size_t pw, std::size_t sh, std::size_t sw) const {
    if (sh == 0) sh = ph;
    if (sw == 0) sw = pw;
    if (in_.size() == 2) {
      const std::size_t p = positions(in_[0], pw, sw, Padding::valid);
      return {{p, in_[1]}, 0, 0, std::uint64_t{p} * pw * in_[1]};
    }
    rank(3);
    const std::size_t h = positions(in_[1], ph, sh, Padding::valid);
    const std::size_t w = positions(in_[2], pw, sw, Padding::valid);
    return {{in_[0], h, w}, 0, 0, std::uint64_t{in_[0]} * h * w * ph * pw};
  }

  LayerCost activated(LayerCost cost, const std::optional<ActivationFn>& fn) const {
    if (fn && fn->kind != ActivationKind::linear) cost.flops += elements(cost.output);
    return cost;
  }

  std::size_t positions(std::size_t length, std::size_t kernel, std::size_t stride,
                        Padding padding) const {
    positive(kernel, "kernel");
    positive(stride, "stride");
    if (padding == Padding::same) return (length + stride - 1) / stride;
    if (length < kernel)
      error("kernel/pool of size " + std::to_string(kernel) + " exceeds input length " +
            std::to_string(length) + " (output dimension would be negative)");
    return (length - kernel) / stride + 1;
  }

  void rank(std::size_t r) const {
    if (in_.size() != r)
      error("expects a rank-" + std::to_string(r) + " input, got " + format_shape(in_));
  }

  void positive(std::size_t v, const char* what) const {
    if (v == 0) error(std::string(what) + " must be positive");
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::shape, "layer " + std::to_string(index_) + " (" +
                               std::string(layer_name(layer_)) + "): " + what);
  }

  std::size_t index_;
  const LayerSpec& layer_;
  const Shape& in_;
};

std::vector<LayerCost> analyze(const ArchitectureSpec& spec, const Shape& input) {
  for (std::size_t d : input)
    require(d > 0, ErrorCode::shape, "input shape " + format_shape(input) + " has an empty dimension");
  std::vector<LayerCost> costs;
  Shape current = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    LayerCost cost = std::visit(LayerAnalyzer(i, spec.layers[i], current), spec.layers[i]);
    for (std::size_t d : cost.output)
      require(d > 0, ErrorCode::shape,
              "layer " + std::to_string(i) + " (" + std::string(layer_name(spec.layers[i])) +
                  "): output " + format_shape(cost.output) + " has an empty dimension");
    current = cost.output;
    costs.push_back(std::move(cost));
  }
  return costs;
}

std::string with_commas(std::uint64_t v) {
  std::string digits = std::to_string(v);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i && (digits.size() - i) % 3 == 0) out += ',';
    out += digits[i];
  }
  return out;
}

std::string signed_delta(std::uint64_t ours, std::uint64_t ref) {
  const auto d = static_cast<long long>(ours) - static_cast<long long>(ref);
  return (d >= 0 ? "+" : "") + std::to_string(d);
}

}  // namespace

std::vector<Shape> infer_shapes(const ArchitectureSpec& spec, const Shape& input) {
  std::vector<Shape> shapes;
  for (auto& cost : analyze(spec, input)) shapes.push_back(std::move(cost.output));
  return shapes;
}

std::vector<Shape> infer_shapes(const ArchitectureSpec& spec) {
  return infer_shapes(spec, spec.input_shape());
}

bool has_batch_norm(const ArchitectureSpec& spec) {
  for (const auto& l : spec.layers)
    if (std::holds_alternative<BatchNorm>(l)) return true;
  return false;
}

ComplexityReport count_params(const ArchitectureSpec& spec, CountOptions options) {
  ComplexityReport report;
  report.architecture = spec.name;
  report.input = spec.input_shape();
  report.bn_running_stats = options.bn_running_stats;
  std::uint64_t trainable_total = 0;
  std::uint64_t stats_total = 0;
  const auto costs = analyze(spec, report.input);
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const auto& c = costs[i];
    LayerRow row{std::string(layer_name(spec.layers[i])), c.output,
                 c.params + (options.bn_running_stats ? c.bn_stats : 0), c.flops};
    report.total_params += row.params;
    report.total_flops += row.flops;
    trainable_total += c.params;
    stats_total += c.bn_stats;
    report.rows.push_back(std::move(row));
  }

  if (has_batch_norm(spec)) {
    if (auto d = dataset_index(spec.channels, spec.samples)) {
      if (auto ref = reference_params(spec.name, *d)) {
        const std::uint64_t with_stats = trainable_total + stats_total;
        report.warnings.push_back(
            spec.name + " @ " + std::string(kDatasetShapes[*d].name) + ": reference total " +
            with_commas(*ref) + "; trainable-only count " + with_commas(trainable_total) +
            " (delta " + signed_delta(trainable_total, *ref) + "); with batch-norm running statistics " +
            with_commas(with_stats) + " (delta " + signed_delta(with_stats, *ref) + ")");
      }
    }
  }
  return report;
}

std::uint64_t count_flops(const ArchitectureSpec& spec) {
  std::uint64_t total = 0;
  for (const auto& c : analyze(spec, spec.input_shape())) total += c.flops;
  return total;
}

}  // namespace p300::complexity
