#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "p300/nn/architecture.hpp"
#include "p300/nn/tensor.hpp"
#include "p300/rng.hpp"

namespace p300::nn {

// ---- activations -------------------------------------------------------------

inline constexpr double kLogLowerBound = 1e-7;
inline constexpr double kLogUpperBound = 1e4;
inline constexpr double kStanhScale = 1.7159;

// Softmax normalizes over consecutive groups of `last_axis` values; every
// other kind is elementwise and ignores it.
void activation_forward(const ActivationFn& fn, std::span<const double> z, std::span<double> out,
                        std::size_t last_axis);
// Writes dL/dz given z, the forward output y, and dL/dy.
void activation_backward(const ActivationFn& fn, std::span<const double> z, std::span<const double> y,
                         std::span<const double> upstream, std::span<double> grad,
                         std::size_t last_axis);

std::vector<double> activation_apply(const ActivationFn& fn, std::span<const double> z,
                                     std::size_t last_axis = 0);
std::vector<double> activation_grad(const ActivationFn& fn, std::span<const double> z,
                                    std::span<const double> upstream, std::size_t last_axis = 0);

// ---- initialization ----------------------------------------------------------

// i.i.d. uniform on [-L, L], L = sqrt(6 / (fan_in + fan_out)).
std::vector<double> glorot_uniform_init(std::size_t count, std::size_t fan_in, std::size_t fan_out,
                                        Rng& rng);
double glorot_limit(std::size_t fan_in, std::size_t fan_out);

// ---- layers ------------------------------------------------------------------
//
// Sequences are (length, channels) row-major. Backward kernels accumulate
// (+=) into parameter gradients and overwrite the input gradient; an empty
// input-gradient span skips that computation.

Matrix zero_pad_1d(const Matrix& x, std::size_t pad_left, std::size_t pad_right);
inline Matrix zero_pad_1d(const Matrix& x, std::size_t pad_per_side) {
  return zero_pad_1d(x, pad_per_side, pad_per_side);
}

struct ConvGeometry {
  std::size_t length = 0;
  std::size_t channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t filters = 0;

  // Throws Error(shape) if length < kernel.
  std::size_t positions() const;
};

// Depthwise (kernel x channels, unbiased) then pointwise (channels x filters) + bias.
void sepconv1d_forward(std::span<const double> x, std::span<const double> depth_kernels,
                       std::span<const double> point_weights, std::span<const double> bias,
                       const ConvGeometry& g, std::span<double> depth_out, std::span<double> y);
void sepconv1d_backward(std::span<const double> x, std::span<const double> depth_kernels,
                        std::span<const double> point_weights, const ConvGeometry& g,
                        std::span<const double> depth_out, std::span<const double> upstream,
                        std::span<double> grad_x, std::span<double> grad_depth,
                        std::span<double> grad_point, std::span<double> grad_bias);

// Kernels laid out [k][c][f].
void conv1d_forward(std::span<const double> x, std::span<const double> kernels,
                    std::span<const double> bias, const ConvGeometry& g, std::span<double> y);
void conv1d_backward(std::span<const double> x, std::span<const double> kernels,
                     const ConvGeometry& g, std::span<const double> upstream,
                     std::span<double> grad_x, std::span<double> grad_kernels,
                     std::span<double> grad_bias);

// y = W^T x + b with W laid out [input][unit].
void dense_forward(std::span<const double> x, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> y);
void dense_backward(std::span<const double> x, std::span<const double> weights,
                    std::span<const double> upstream, std::span<double> grad_x,
                    std::span<double> grad_weights, std::span<double> grad_bias);

// Value-returning forms of the kernels above.
Matrix sepconv1d_forward(const Matrix& x, const Matrix& depth_kernels, const Matrix& point_weights,
                         std::span<const double> bias, std::size_t stride);

struct SepConvGrads {
  Matrix input;
  Matrix depth_kernels;
  Matrix point_weights;
  std::vector<double> bias;
};
SepConvGrads sepconv1d_backward(const Matrix& x, const Matrix& depth_kernels,
                                const Matrix& point_weights, std::size_t stride,
                                const Matrix& upstream);

Matrix conv1d_forward(const Matrix& x, std::span<const double> kernels, std::span<const double> bias,
                      std::size_t kernel, std::size_t stride);

struct ConvGrads {
  Matrix input;
  std::vector<double> kernels;
  std::vector<double> bias;
};
ConvGrads conv1d_backward(const Matrix& x, std::span<const double> kernels, std::size_t kernel,
                          std::size_t stride, const Matrix& upstream);

std::vector<double> dense_forward(std::span<const double> x, const Matrix& weights,
                                  std::span<const double> bias);

struct DenseGrads {
  std::vector<double> input;
  Matrix weights;
  std::vector<double> bias;
};
DenseGrads dense_backward(std::span<const double> x, const Matrix& weights,
                          std::span<const double> upstream);

// Inverted dropout: in training, zero with probability `rate` and scale the
// survivors by 1/(1-rate). `mask` receives the per-element multiplier.
void dropout_forward(std::span<const double> x, double rate, bool training, Rng& rng,
                     std::span<double> mask, std::span<double> y);
std::vector<double> dropout_apply(std::span<const double> x, double rate, bool training, Rng& rng);

}  // namespace p300::nn
