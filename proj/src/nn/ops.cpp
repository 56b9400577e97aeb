#include "p300/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "p300/error.hpp"

namespace p300::nn {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (!(a == b)) fail(ErrorCode::shape, std::string(what) + ": expected " + std::to_string(b) + " values, got " + std::to_string(a));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t softmax_group(std::size_t size, std::size_t last_axis) {
  const std::size_t group = last_axis == 0 ? size : last_axis;
  if (!(group > 0 && size % group == 0)) fail(ErrorCode::shape, "softmax axis length " + std::to_string(group) + " does not divide " + std::to_string(size));
  return group;
}

}  // namespace

void activation_forward(const ActivationFn& fn, std::span<const double> z, std::span<double> out,
                        std::size_t last_axis) {
  require_same_size(out.size(), z.size(), "activation output");
  const std::size_t n = z.size();
  switch (fn.kind) {
    case ActivationKind::linear:
      std::copy(z.begin(), z.end(), out.begin());
      return;
    case ActivationKind::log:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::log(std::clamp(z[i], kLogLowerBound, kLogUpperBound));
      return;
    case ActivationKind::square:
      for (std::size_t i = 0; i < n; ++i) out[i] = z[i] * z[i];
      return;
    case ActivationKind::sigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid(z[i]);
      return;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(z[i]);
      return;
    case ActivationKind::stanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = kStanhScale * std::tanh(2.0 * z[i] / 3.0);
      return;
    case ActivationKind::relu:
      for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : 0.0;
      return;
    case ActivationKind::elu:
      for (std::size_t i = 0; i < n; ++i) out[i] = z[i] > 0.0 ? z[i] : fn.elu_alpha * std::expm1(z[i]);
      return;
    case ActivationKind::softmax: {
      if (n == 0) return;
      const std::size_t group = softmax_group(n, last_axis);
      for (std::size_t start = 0; start < n; start += group) {
        const double peak = *std::max_element(z.begin() + start, z.begin() + start + group);
        double total = 0.0;
        for (std::size_t i = start; i < start + group; ++i) {
          out[i] = std::exp(z[i] - peak);
          total += out[i];
        }
        for (std::size_t i = start; i < start + group; ++i) out[i] /= total;
      }
      return;
    }
  }
  fail(ErrorCode::invalid_argument, "unknown activation kind");
}

void activation_backward(const ActivationFn& fn, std::span<const double> z, std::span<const double> y,
                         std::span<const double> upstream, std::span<double> grad,
                         std::size_t last_axis) {
  const std::size_t n = z.size();
  require_same_size(y.size(), n, "activation output");
  require_same_size(upstream.size(), n, "activation upstream gradient");
  require_same_size(grad.size(), n, "activation gradient");
  switch (fn.kind) {
    case ActivationKind::linear:
      std::copy(upstream.begin(), upstream.end(), grad.begin());
      return;
    case ActivationKind::log:
      // Zero slope where the clamp is active.
      for (std::size_t i = 0; i < n; ++i) {
        const bool inside = z[i] >= kLogLowerBound && z[i] <= kLogUpperBound;
        grad[i] = inside ? upstream[i] / z[i] : 0.0;
      }
      return;
    case ActivationKind::square:
      for (std::size_t i = 0; i < n; ++i) grad[i] = upstream[i] * 2.0 * z[i];
      return;
    case ActivationKind::sigmoid:
      for (std::size_t i = 0; i < n; ++i) grad[i] = upstream[i] * y[i] * (1.0 - y[i]);
      return;
    case ActivationKind::tanh:
      for (std::size_t i = 0; i < n; ++i) grad[i] = upstream[i] * (1.0 - y[i] * y[i]);
      return;
    case ActivationKind::stanh:
      for (std::size_t i = 0; i < n; ++i) {
        const double t = std::tanh(2.0 * z[i] / 3.0);
        grad[i] = upstream[i] * kStanhScale * (2.0 / 3.0) * (1.0 - t * t);
      }
      return;
    case ActivationKind::relu:
      for (std::size_t i = 0; i < n; ++i) grad[i] = z[i] > 0.0 ? upstream[i] : 0.0;
      return;
    case ActivationKind::elu:
      for (std::size_t i = 0; i < n; ++i)
        grad[i] = z[i] > 0.0 ? upstream[i] : upstream[i] * fn.elu_alpha * std::exp(z[i]);
      return;
    case ActivationKind::softmax: {
      if (n == 0) return;
      const std::size_t group = softmax_group(n, last_axis);
      for (std::size_t start = 0; start < n; start += group) {
        double dot = 0.0;
        for (std::size_t i = start; i < start + group; ++i) dot += upstream[i] * y[i];
        for (std::size_t i = start; i < start + group; ++i) grad[i] = y[i] * (upstream[i] - dot);
      }
      return;
    }
  }
  fail(ErrorCode::invalid_argument, "unknown activation kind");
}

std::vector<double> activation_apply(const ActivationFn& fn, std::span<const double> z,
                                     std::size_t last_axis) {
  std::vector<double> out(z.size());
  activation_forward(fn, z, out, last_axis);
  return out;
}

std::vector<double> activation_grad(const ActivationFn& fn, std::span<const double> z,
                                    std::span<const double> upstream, std::size_t last_axis) {
  const std::vector<double> y = activation_apply(fn, z, last_axis);
  std::vector<double> grad(z.size());
  activation_backward(fn, z, y, upstream, grad, last_axis);
  return grad;
}

double glorot_limit(std::size_t fan_in, std::size_t fan_out) {
  if (!(fan_in >= 1 && fan_out >= 1)) fail(ErrorCode::invalid_argument, "glorot fans must be >= 1");
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

std::vector<double> glorot_uniform_init(std::size_t count, std::size_t fan_in, std::size_t fan_out,
                                        Rng& rng) {
  const double limit = glorot_limit(fan_in, fan_out);
  std::vector<double> values(count);
  for (double& v : values) v = rng.uniform(-limit, limit);
  return values;
}

Matrix zero_pad_1d(const Matrix& x, std::size_t pad_left, std::size_t pad_right) {
  Matrix out(x.rows() + pad_left + pad_right, x.cols());
  std::copy(x.values().begin(), x.values().end(), out.values().begin() + static_cast<std::ptrdiff_t>(pad_left * x.cols()));
  return out;
}

std::size_t ConvGeometry::positions() const {
  if (!(kernel >= 1 && stride >= 1)) fail(ErrorCode::shape, "kernel and stride must be >= 1");
  if (!(length >= kernel)) fail(ErrorCode::shape, "input length " + std::to_string(length) + " is shorter than kernel " + std::to_string(kernel));
  return (length - kernel) / stride + 1;
}

void sepconv1d_forward(std::span<const double> x, std::span<const double> depth_kernels,
                       std::span<const double> point_weights, std::span<const double> bias,
                       const ConvGeometry& g, std::span<double> depth_out, std::span<double> y) {
  const std::size_t P = g.positions();
  const std::size_t C = g.channels;
  const std::size_t F = g.filters;
  require_same_size(x.size(), g.length * C, "sepconv input");
  require_same_size(depth_kernels.size(), g.kernel * C, "depthwise kernels");
  require_same_size(point_weights.size(), C * F, "pointwise weights");
  if (!(bias.empty() || bias.size() == F)) fail(ErrorCode::shape, "sepconv bias size mismatch");
  require_same_size(depth_out.size(), P * C, "depthwise output");
  require_same_size(y.size(), P * F, "sepconv output");

  for (std::size_t p = 0; p < P; ++p) {
    double* d = depth_out.data() + p * C;
    std::fill(d, d + C, 0.0);
    for (std::size_t k = 0; k < g.kernel; ++k) {
      const double* xr = x.data() + (p * g.stride + k) * C;
      const double* wr = depth_kernels.data() + k * C;
      for (std::size_t c = 0; c < C; ++c) d[c] += xr[c] * wr[c];
    }
    double* out = y.data() + p * F;
    for (std::size_t f = 0; f < F; ++f) out[f] = bias.empty() ? 0.0 : bias[f];
    for (std::size_t c = 0; c < C; ++c) {
      const double dv = d[c];
      const double* pw = point_weights.data() + c * F;
      for (std::size_t f = 0; f < F; ++f) out[f] += dv * pw[f];
    }
  }
}

void sepconv1d_backward(std::span<const double> x, std::span<const double> depth_kernels,
                        std::span<const double> point_weights, const ConvGeometry& g,
                        std::span<const double> depth_out, std::span<const double> upstream,
                        std::span<double> grad_x, std::span<double> grad_depth,
                        std::span<double> grad_point, std::span<double> grad_bias) {
  const std::size_t P = g.positions();
  const std::size_t C = g.channels;
  const std::size_t F = g.filters;
  require_same_size(upstream.size(), P * F, "sepconv upstream gradient");
  require_same_size(depth_out.size(), P * C, "depthwise output");
  require_same_size(grad_depth.size(), g.kernel * C, "depthwise kernel gradient");
  require_same_size(grad_point.size(), C * F, "pointwise weight gradient");
  if (!(grad_bias.empty() || grad_bias.size() == F)) fail(ErrorCode::shape, "sepconv bias gradient size mismatch");
  if (!grad_x.empty()) {
    require_same_size(grad_x.size(), g.length * C, "sepconv input gradient");
    std::fill(grad_x.begin(), grad_x.end(), 0.0);
  }

  std::vector<double> grad_d(C);
  for (std::size_t p = 0; p < P; ++p) {
    const double* up = upstream.data() + p * F;
    const double* d = depth_out.data() + p * C;
    if (!grad_bias.empty())
      for (std::size_t f = 0; f < F; ++f) grad_bias[f] += up[f];
    for (std::size_t c = 0; c < C; ++c) {
      const double* pw = point_weights.data() + c * F;
      double* gp = grad_point.data() + c * F;
      double acc = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        gp[f] += d[c] * up[f];
        acc += pw[f] * up[f];
      }
      grad_d[c] = acc;
    }
    for (std::size_t k = 0; k < g.kernel; ++k) {
      const std::size_t row = (p * g.stride + k) * C;
      const double* xr = x.data() + row;
      double* gd = grad_depth.data() + k * C;
      for (std::size_t c = 0; c < C; ++c) gd[c] += xr[c] * grad_d[c];
      if (!grad_x.empty()) {
        const double* wr = depth_kernels.data() + k * C;
        double* gx = grad_x.data() + row;
        for (std::size_t c = 0; c < C; ++c) gx[c] += wr[c] * grad_d[c];
      }
    }
  }
}

void conv1d_forward(std::span<const double> x, std::span<const double> kernels,
                    std::span<const double> bias, const ConvGeometry& g, std::span<double> y) {
  const std::size_t P = g.positions();
  const std::size_t C = g.channels;
  const std::size_t F = g.filters;
  require_same_size(x.size(), g.length * C, "conv input");
  require_same_size(kernels.size(), g.kernel * C * F, "conv kernels");
  if (!(bias.empty() || bias.size() == F)) fail(ErrorCode::shape, "conv bias size mismatch");
  require_same_size(y.size(), P * F, "conv output");

  for (std::size_t p = 0; p < P; ++p) {
    double* out = y.data() + p * F;
    for (std::size_t f = 0; f < F; ++f) out[f] = bias.empty() ? 0.0 : bias[f];
    // Window rows are contiguous, so the (k, c) pair runs as one flat index.
    const double* window = x.data() + p * g.stride * C;
    for (std::size_t kc = 0; kc < g.kernel * C; ++kc) {
      const double xv = window[kc];
      const double* w = kernels.data() + kc * F;
      for (std::size_t f = 0; f < F; ++f) out[f] += xv * w[f];
    }
  }
}

void conv1d_backward(std::span<const double> x, std::span<const double> kernels,
                     const ConvGeometry& g, std::span<const double> upstream,
                     std::span<double> grad_x, std::span<double> grad_kernels,
                     std::span<double> grad_bias) {
  const std::size_t P = g.positions();
  const std::size_t C = g.channels;
  const std::size_t F = g.filters;
  require_same_size(upstream.size(), P * F, "conv upstream gradient");
  require_same_size(grad_kernels.size(), g.kernel * C * F, "conv kernel gradient");
  if (!(grad_bias.empty() || grad_bias.size() == F)) fail(ErrorCode::shape, "conv bias gradient size mismatch");
  if (!grad_x.empty()) {
    require_same_size(grad_x.size(), g.length * C, "conv input gradient");
    std::fill(grad_x.begin(), grad_x.end(), 0.0);
  }

  for (std::size_t p = 0; p < P; ++p) {
    const double* up = upstream.data() + p * F;
    if (!grad_bias.empty())
      for (std::size_t f = 0; f < F; ++f) grad_bias[f] += up[f];
    const std::size_t base = p * g.stride * C;
    for (std::size_t kc = 0; kc < g.kernel * C; ++kc) {
      const double xv = x[base + kc];
      const double* w = kernels.data() + kc * F;
      double* gw = grad_kernels.data() + kc * F;
      double acc = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        gw[f] += xv * up[f];
        acc += w[f] * up[f];
      }
      if (!grad_x.empty()) grad_x[base + kc] += acc;
    }
  }
}

void dense_forward(std::span<const double> x, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> y) {
  const std::size_t D = x.size();
  const std::size_t U = y.size();
  if (!(D > 0)) fail(ErrorCode::shape, "dense input is empty");
  require_same_size(weights.size(), D * U, "dense weights");
  if (!(bias.empty() || bias.size() == U)) fail(ErrorCode::shape, "dense bias size mismatch");
  for (std::size_t u = 0; u < U; ++u) y[u] = bias.empty() ? 0.0 : bias[u];
  for (std::size_t d = 0; d < D; ++d) {
    const double xv = x[d];
    const double* w = weights.data() + d * U;
    for (std::size_t u = 0; u < U; ++u) y[u] += xv * w[u];
  }
}

void dense_backward(std::span<const double> x, std::span<const double> weights,
                    std::span<const double> upstream, std::span<double> grad_x,
                    std::span<double> grad_weights, std::span<double> grad_bias) {
  const std::size_t D = x.size();
  const std::size_t U = upstream.size();
  require_same_size(weights.size(), D * U, "dense weights");
  require_same_size(grad_weights.size(), D * U, "dense weight gradient");
  if (!(grad_bias.empty() || grad_bias.size() == U)) fail(ErrorCode::shape, "dense bias gradient size mismatch");
  if (!grad_x.empty()) require_same_size(grad_x.size(), D, "dense input gradient");
  if (!grad_bias.empty())
    for (std::size_t u = 0; u < U; ++u) grad_bias[u] += upstream[u];
  for (std::size_t d = 0; d < D; ++d) {
    const double* w = weights.data() + d * U;
    double* gw = grad_weights.data() + d * U;
    double acc = 0.0;
    for (std::size_t u = 0; u < U; ++u) {
      gw[u] += x[d] * upstream[u];
      acc += w[u] * upstream[u];
    }
    if (!grad_x.empty()) grad_x[d] = acc;
  }
}

Matrix sepconv1d_forward(const Matrix& x, const Matrix& depth_kernels, const Matrix& point_weights,
                         std::span<const double> bias, std::size_t stride) {
  if (!(depth_kernels.cols() == x.cols() && point_weights.rows() == x.cols())) fail(ErrorCode::shape, "sepconv channel count mismatch");
  const ConvGeometry g{x.rows(), x.cols(), depth_kernels.rows(), stride, point_weights.cols()};
  const std::size_t P = g.positions();
  Matrix depth_out(P, g.channels);
  Matrix y(P, g.filters);
  sepconv1d_forward(x.values(), depth_kernels.values(), point_weights.values(), bias, g,
                    depth_out.values(), y.values());
  return y;
}

SepConvGrads sepconv1d_backward(const Matrix& x, const Matrix& depth_kernels,
                                const Matrix& point_weights, std::size_t stride,
                                const Matrix& upstream) {
  if (!(depth_kernels.cols() == x.cols() && point_weights.rows() == x.cols())) fail(ErrorCode::shape, "sepconv channel count mismatch");
  const ConvGeometry g{x.rows(), x.cols(), depth_kernels.rows(), stride, point_weights.cols()};
  const std::size_t P = g.positions();
  Matrix depth_out(P, g.channels);
  Matrix y(P, g.filters);
  sepconv1d_forward(x.values(), depth_kernels.values(), point_weights.values(), {}, g,
                    depth_out.values(), y.values());
  SepConvGrads grads{Matrix(x.rows(), x.cols()), Matrix(depth_kernels.rows(), depth_kernels.cols()),
                     Matrix(point_weights.rows(), point_weights.cols()),
                     std::vector<double>(g.filters, 0.0)};
  sepconv1d_backward(x.values(), depth_kernels.values(), point_weights.values(), g,
                     depth_out.values(), upstream.values(), grads.input.values(),
                     grads.depth_kernels.values(), grads.point_weights.values(), grads.bias);
  return grads;
}

Matrix conv1d_forward(const Matrix& x, std::span<const double> kernels, std::span<const double> bias,
                      std::size_t kernel, std::size_t stride) {
  if (!(kernel >= 1 && !kernels.empty() && kernels.size() % (kernel * x.cols()) == 0)) fail(ErrorCode::shape, "conv kernel size mismatch");
  const ConvGeometry g{x.rows(), x.cols(), kernel, stride, kernels.size() / (kernel * x.cols())};
  Matrix y(g.positions(), g.filters);
  conv1d_forward(x.values(), kernels, bias, g, y.values());
  return y;
}

ConvGrads conv1d_backward(const Matrix& x, std::span<const double> kernels, std::size_t kernel,
                          std::size_t stride, const Matrix& upstream) {
  if (!(kernel >= 1 && !kernels.empty() && kernels.size() % (kernel * x.cols()) == 0)) fail(ErrorCode::shape, "conv kernel size mismatch");
  const ConvGeometry g{x.rows(), x.cols(), kernel, stride, kernels.size() / (kernel * x.cols())};
  ConvGrads grads{Matrix(x.rows(), x.cols()), std::vector<double>(kernels.size(), 0.0),
                  std::vector<double>(g.filters, 0.0)};
  conv1d_backward(x.values(), kernels, g, upstream.values(), grads.input.values(), grads.kernels,
                  grads.bias);
  return grads;
}

std::vector<double> dense_forward(std::span<const double> x, const Matrix& weights,
                                  std::span<const double> bias) {
  if (!(weights.rows() == x.size())) fail(ErrorCode::shape, "dense weight rows must equal input size");
  std::vector<double> y(weights.cols());
  dense_forward(x, weights.values(), bias, y);
  return y;
}

DenseGrads dense_backward(std::span<const double> x, const Matrix& weights,
                          std::span<const double> upstream) {
  if (!(weights.rows() == x.size() && weights.cols() == upstream.size())) fail(ErrorCode::shape, "dense weight shape mismatch");
  DenseGrads grads{std::vector<double>(x.size()), Matrix(weights.rows(), weights.cols()),
                   std::vector<double>(upstream.size(), 0.0)};
  dense_backward(x, weights.values(), upstream, grads.input, grads.weights.values(), grads.bias);
  return grads;
}

void dropout_forward(std::span<const double> x, double rate, bool training, Rng& rng,
                     std::span<double> mask, std::span<double> y) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorCode::invalid_argument, "dropout rate must be in [0, 1)");
  require_same_size(mask.size(), x.size(), "dropout mask");
  require_same_size(y.size(), x.size(), "dropout output");
  if (!training || rate == 0.0) {
    std::fill(mask.begin(), mask.end(), 1.0);
    std::copy(x.begin(), x.end(), y.begin());
    return;
  }
  const double keep_scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    y[i] = x[i] * mask[i];
  }
}

std::vector<double> dropout_apply(std::span<const double> x, double rate, bool training, Rng& rng) {
  std::vector<double> mask(x.size());
  std::vector<double> y(x.size());
  dropout_forward(x, rate, training, rng, mask, y);
  return y;
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
  if (!(data_.size() == rows * cols)) fail(ErrorCode::shape, "matrix " + std::to_string(rows) + "x" + std::to_string(cols) + " given " +
              std::to_string(data_.size()) + " values");
}

}  // namespace p300::nn
