#include "p300/nn/model.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <string>

#include "p300/complexity.hpp"
#include "p300/error.hpp"
#include "p300/nn/ops.hpp"

namespace p300::nn {

namespace {

std::size_t product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

[[noreturn]] void not_trainable(const ArchitectureSpec& spec, std::size_t index,
                                const LayerSpec& layer, const std::string& why) {
  fail(ErrorCode::analysis_only,
       "architecture '" + spec.name + "' is analysis-only: layer " + std::to_string(index) + " (" +
           std::string(layer_name(layer)) + ") " + why);
}

}  // namespace

std::size_t ParamBlock::size() const { return product(shape); }

std::span<double> ModelState::block(std::size_t i) {
  return {params.data() + blocks.at(i).offset, blocks[i].size()};
}
std::span<const double> ModelState::block(std::size_t i) const {
  return {params.data() + blocks.at(i).offset, blocks[i].size()};
}
std::span<double> ModelState::grad_block(std::size_t i) {
  return {grads.data() + blocks.at(i).offset, blocks[i].size()};
}
std::span<const double> ModelState::grad_block(std::size_t i) const {
  return {grads.data() + blocks.at(i).offset, blocks[i].size()};
}

std::size_t Model::add_block(const std::string& name, std::size_t layer, Shape shape) {
  ParamBlock block{name, layer, state_.params.size(), std::move(shape)};
  state_.params.resize(state_.params.size() + block.size(), 0.0);
  state_.blocks.push_back(std::move(block));
  return state_.blocks.back().offset;
}

Model::Model(ArchitectureSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  state_.seed = seed;
  spec_shapes_ = complexity::infer_shapes(spec_);

  struct Fans {
    std::size_t block, fan_in, fan_out;
  };
  std::vector<Fans> glorot;

  Shape cur = spec_.input_shape();
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& layer = spec_.layers[i];
    const std::string prefix = std::string(layer_keyword(layer)) + "_" + std::to_string(i);
    auto add_activation = [&](const std::optional<ActivationFn>& fn, std::size_t last_axis) {
      if (!fn) return;
      Op act(OpKind::activation);
      act.spec_layer = i;
      act.fn = *fn;
      act.last_axis = last_axis;
      ops_.push_back(act);
    };

    if (const auto* pad = std::get_if<ZeroPad1D>(&layer)) {
      Op op(OpKind::pad);
      op.spec_layer = i;
      op.in_rows = cur[0];
      op.in_cols = cur[1];
      op.pad_left = pad->left;
      ops_.push_back(op);
    } else if (const auto* conv = std::get_if<Conv1D>(&layer)) {
      if (conv->padding == Padding::same && (conv->kernel != 1 || conv->stride != 1))
        not_trainable(spec_, i, layer, "uses same padding, which has no backward pass");
      Op op(OpKind::conv);
      op.spec_layer = i;
      op.in_rows = cur[0];
      op.in_cols = cur[1];
      op.kernel = conv->kernel;
      op.stride = conv->stride;
      op.filters = conv->filters;
      op.weights = add_block(prefix + "/kernel", i, {conv->kernel, cur[1], conv->filters});
      glorot.push_back({state_.blocks.size() - 1, conv->kernel * cur[1], conv->kernel * conv->filters});
      if (conv->use_bias) {
        op.has_bias = true;
        op.bias = add_block(prefix + "/bias", i, {conv->filters});
      }
      ops_.push_back(op);
      add_activation(conv->activation, conv->filters);
    } else if (const auto* sep = std::get_if<SeparableConv1D>(&layer)) {
      if (sep->depth_multiplier != 1)
        not_trainable(spec_, i, layer, "has a depth multiplier, which has no backward pass");
      if (sep->padding == Padding::same && (sep->kernel != 1 || sep->stride != 1))
        not_trainable(spec_, i, layer, "uses same padding, which has no backward pass");
      Op op(OpKind::sepconv);
      op.spec_layer = i;
      op.in_rows = cur[0];
      op.in_cols = cur[1];
      op.kernel = sep->kernel;
      op.stride = sep->stride;
      op.filters = sep->filters;
      op.weights = add_block(prefix + "/depthwise_kernel", i, {sep->kernel, cur[1]});
      glorot.push_back({state_.blocks.size() - 1, sep->kernel * cur[1], sep->kernel});
      op.extra = add_block(prefix + "/pointwise_kernel", i, {cur[1], sep->filters});
      glorot.push_back({state_.blocks.size() - 1, cur[1], sep->filters});
      if (sep->use_bias) {
        op.has_bias = true;
        op.bias = add_block(prefix + "/bias", i, {sep->filters});
      }
      op.cache.resize(spec_shapes_[i][0] * cur[1]);
      ops_.push_back(op);
      add_activation(sep->activation, sep->filters);
    } else if (const auto* dense = std::get_if<Dense>(&layer)) {
      if (cur.size() != 1) not_trainable(spec_, i, layer, "is applied to a non-flat input");
      Op op(OpKind::dense);
      op.spec_layer = i;
      op.in_rows = cur[0];
      op.filters = dense->units;
      op.weights = add_block(prefix + "/kernel", i, {cur[0], dense->units});
      glorot.push_back({state_.blocks.size() - 1, cur[0], dense->units});
      if (dense->use_bias) {
        op.has_bias = true;
        op.bias = add_block(prefix + "/bias", i, {dense->units});
      }
      ops_.push_back(op);
      add_activation(dense->activation, dense->units);
    } else if (std::holds_alternative<Flatten>(layer) || std::holds_alternative<Reshape>(layer)) {
      // Row-major data is already laid out as the new shape.
    } else if (const auto* act = std::get_if<Activation>(&layer)) {
      add_activation(act->fn, cur.back());
    } else if (const auto* drop = std::get_if<Dropout>(&layer)) {
      Op op(OpKind::dropout);
      op.spec_layer = i;
      op.rate = drop->rate;
      ops_.push_back(op);
    } else {
      not_trainable(spec_, i, layer, "has no backward pass");
    }
    cur = spec_shapes_[i];
  }

  const std::size_t out_size = product(cur);
  const bool sigmoid_head = !ops_.empty() && ops_.back().kind == OpKind::activation &&
                            ops_.back().fn.kind == ActivationKind::sigmoid && out_size == 1;
  const bool softmax_head = !ops_.empty() && ops_.back().kind == OpKind::activation &&
                            ops_.back().fn.kind == ActivationKind::softmax && out_size == 2;
  if (!(sigmoid_head || softmax_head)) fail(ErrorCode::invalid_argument, "architecture '" + spec_.name +
              "' must end in a sigmoid over one unit or a softmax over two units");
  head_ = sigmoid_head ? Head::sigmoid : Head::softmax;
  first_param_op_ = 0;
  while (first_param_op_ < ops_.size() && ops_[first_param_op_].kind != OpKind::conv &&
         ops_[first_param_op_].kind != OpKind::sepconv && ops_[first_param_op_].kind != OpKind::dense)
    ++first_param_op_;

  Rng rng(seed);
  for (const Fans& f : glorot) {
    const std::vector<double> values =
        glorot_uniform_init(state_.blocks[f.block].size(), f.fan_in, f.fan_out, rng);
    std::copy(values.begin(), values.end(), state_.block(f.block).begin());
  }
  state_.grads.assign(state_.params.size(), 0.0);

  // Buffer sizes follow each op's output.
  acts_.resize(ops_.size() + 1);
  acts_[0].resize(spec_.samples * spec_.channels);
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    const Op& op = ops_[k];
    std::size_t size = acts_[k].size();
    switch (op.kind) {
      case OpKind::pad:
      case OpKind::conv:
      case OpKind::sepconv:
      case OpKind::dense:
        size = product(spec_shapes_[op.spec_layer]);
        break;
      case OpKind::activation:
      case OpKind::dropout:
        break;
    }
    if (op.kind == OpKind::dense) if (!(acts_[k].size() == op.in_rows)) fail(ErrorCode::shape, "dense input size mismatch");
    acts_[k + 1].resize(size);
  }
  for (std::size_t k = 0; k < ops_.size(); ++k)
    if (ops_[k].kind == OpKind::dropout) ops_[k].cache.resize(acts_[k].size());
  grads_.resize(acts_.size());
  for (std::size_t k = 0; k < acts_.size(); ++k) grads_[k].resize(acts_[k].size());
  input_grad_.resize(acts_[0].size());
}

std::span<const double> Model::forward(std::span<const double> trial, bool training,
                                       Rng& dropout_rng) {
  const std::size_t C = spec_.channels;
  const std::size_t S = spec_.samples;
  if (!(trial.size() == C * S)) fail(ErrorCode::shape, "trial has " + std::to_string(trial.size()) + " values, model expects " +
              std::to_string(C * S));
  std::vector<double>& x0 = acts_[0];
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t s = 0; s < S; ++s) x0[s * C + c] = trial[c * S + s];

  const std::span<const double> params = state_.params;
  for (std::size_t k = 0; k < ops_.size(); ++k) {
    Op& op = ops_[k];
    const std::span<const double> in = acts_[k];
    const std::span<double> out = acts_[k + 1];
    const auto bias = op.has_bias ? params.subspan(op.bias, op.filters) : std::span<const double>{};
    switch (op.kind) {
      case OpKind::pad:
        std::fill(out.begin(), out.end(), 0.0);
        std::copy(in.begin(), in.end(), out.begin() + static_cast<std::ptrdiff_t>(op.pad_left * op.in_cols));
        break;
      case OpKind::conv: {
        const ConvGeometry g{op.in_rows, op.in_cols, op.kernel, op.stride, op.filters};
        conv1d_forward(in, params.subspan(op.weights, op.kernel * op.in_cols * op.filters), bias, g, out);
        break;
      }
      case OpKind::sepconv: {
        const ConvGeometry g{op.in_rows, op.in_cols, op.kernel, op.stride, op.filters};
        sepconv1d_forward(in, params.subspan(op.weights, op.kernel * op.in_cols),
                          params.subspan(op.extra, op.in_cols * op.filters), bias, g, op.cache, out);
        break;
      }
      case OpKind::dense:
        dense_forward(in, params.subspan(op.weights, op.in_rows * op.filters), bias, out);
        break;
      case OpKind::activation:
        activation_forward(op.fn, in, out, op.last_axis);
        break;
      case OpKind::dropout:
        dropout_forward(in, op.rate, training, dropout_rng, op.cache, out);
        break;
    }
  }
  return acts_.back();
}

std::span<const double> Model::predict(std::span<const double> trial) {
  return forward(trial, false, inference_rng_);
}

double Model::score(std::span<const double> trial) {
  const std::span<const double> out = predict(trial);
  return head_ == Head::sigmoid ? out[0] : out[1];
}

void Model::backward(std::span<const double> output_grad, bool with_input_grad) {
  if (!(output_grad.size() == acts_.back().size())) fail(ErrorCode::shape, "output gradient size mismatch");
  std::copy(output_grad.begin(), output_grad.end(), grads_.back().begin());

  const std::span<const double> params = state_.params;
  const std::span<double> g = state_.grads;
  const std::size_t stop = with_input_grad ? 0 : first_param_op_;
  for (std::size_t k = ops_.size(); k-- > stop;) {
    const Op& op = ops_[k];
    const std::span<const double> in = acts_[k];
    const std::span<const double> out = acts_[k + 1];
    const std::span<const double> up = grads_[k + 1];
    const std::span<double> gin =
        with_input_grad || k > first_param_op_ ? std::span<double>(grads_[k]) : std::span<double>{};
    const auto gbias = op.has_bias ? g.subspan(op.bias, op.filters) : std::span<double>{};
    switch (op.kind) {
      case OpKind::pad:
        std::copy_n(up.begin() + static_cast<std::ptrdiff_t>(op.pad_left * op.in_cols), gin.size(), gin.begin());
        break;
      case OpKind::conv: {
        const ConvGeometry geo{op.in_rows, op.in_cols, op.kernel, op.stride, op.filters};
        const std::size_t n = op.kernel * op.in_cols * op.filters;
        conv1d_backward(in, params.subspan(op.weights, n), geo, up, gin, g.subspan(op.weights, n), gbias);
        break;
      }
      case OpKind::sepconv: {
        const ConvGeometry geo{op.in_rows, op.in_cols, op.kernel, op.stride, op.filters};
        const std::size_t nd = op.kernel * op.in_cols;
        const std::size_t np = op.in_cols * op.filters;
        sepconv1d_backward(in, params.subspan(op.weights, nd), params.subspan(op.extra, np), geo,
                           op.cache, up, gin, g.subspan(op.weights, nd), g.subspan(op.extra, np), gbias);
        break;
      }
      case OpKind::dense: {
        const std::size_t n = op.in_rows * op.filters;
        dense_backward(in, params.subspan(op.weights, n), up, gin, g.subspan(op.weights, n), gbias);
        break;
      }
      case OpKind::activation:
        activation_backward(op.fn, in, out, up, gin, op.last_axis);
        break;
      case OpKind::dropout:
        for (std::size_t i = 0; i < gin.size(); ++i) gin[i] = up[i] * op.cache[i];
        break;
    }
  }

  if (!with_input_grad) return;
  const std::size_t C = spec_.channels;
  const std::size_t S = spec_.samples;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t s = 0; s < S; ++s) input_grad_[c * S + s] = grads_[0][s * C + c];
}

void Model::zero_grad() { std::fill(state_.grads.begin(), state_.grads.end(), 0.0); }

}  // namespace p300::nn
