#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p300/nn/architecture.hpp"

namespace p300::complexity {

using nn::ArchitectureSpec;
using nn::Shape;

struct CountOptions {
  // Also count the two non-trainable running statistics of each BatchNorm channel.
  bool bn_running_stats = false;
};

struct LayerRow {
  std::string layer;
  Shape output;
  std::uint64_t params = 0;
  std::uint64_t flops = 0;
};

struct ComplexityReport {
  std::string architecture;
  Shape input;
  bool bn_running_stats = false;
  std::vector<LayerRow> rows;
  std::uint64_t total_params = 0;
  std::uint64_t total_flops = 0;
  std::vector<std::string> warnings;
};

inline constexpr std::string_view kFlopsConvention =
    "flops = 2 per multiply-accumulate; +1 per activation output element; "
    "+2 per batch-norm element; +1 per element visited by pooling; bias adds not counted";

// Output shape of every layer, in order. Throws Error(shape) naming the layer
// whose output would be empty or negative.
std::vector<Shape> infer_shapes(const ArchitectureSpec& spec);
std::vector<Shape> infer_shapes(const ArchitectureSpec& spec, const Shape& input);

ComplexityReport count_params(const ArchitectureSpec& spec, CountOptions options = {});
std::uint64_t count_flops(const ArchitectureSpec& spec);

// --- Built-in architectures -------------------------------------------------

struct BuiltinOptions {
  std::size_t sepconv_filters = 4;
  // EEGNet block sizes.
  std::size_t eegnet_f1 = 8;
  std::size_t eegnet_depth = 2;
  std::size_t eegnet_f2 = 16;
  double eegnet_dropout = 0.5;
};

const std::vector<std::string>& builtin_names();
bool is_builtin(std::string_view name);

// Throws Error(unknown_architecture) listing the available names.
ArchitectureSpec builtin_architecture(std::string_view name, std::size_t channels,
                                      std::size_t samples, const BuiltinOptions& options = {});
std::vector<ArchitectureSpec> builtin_architectures(std::size_t channels, std::size_t samples,
                                                    const BuiltinOptions& options = {});

// Symmetric-as-possible zero padding and kernel (= stride) that split the
// input into `parts` equal segments; OCLNN's temporal layout.
struct SegmentLayout {
  std::size_t kernel;
  std::size_t pad_left;
  std::size_t pad_right;
};
SegmentLayout segment_layout(std::size_t samples, std::size_t parts);

// --- Reference totals ---------------------------------------------------------

struct DatasetShape {
  std::string_view name;
  std::size_t channels;
  std::size_t samples;
};

inline constexpr std::array<DatasetShape, 4> kDatasetShapes{{
    {"D1", 6, 206}, {"D2", 64, 156}, {"D3", 64, 240}, {"D4", 8, 206}}};

std::optional<std::size_t> dataset_index(std::size_t channels, std::size_t samples);

// Reference trainable-parameter totals per dataset shape. Both CNN variants
// share an entry with their U-prefixed counterparts.
std::optional<std::uint64_t> reference_params(std::string_view name, std::size_t dataset);
// Secondary reference listing: parameter and FLOPS totals.
std::optional<std::uint64_t> reference_params_alt(std::string_view name, std::size_t dataset);
std::optional<std::uint64_t> reference_flops(std::string_view name, std::size_t dataset);

bool has_batch_norm(const ArchitectureSpec& spec);

}  // namespace p300::complexity
