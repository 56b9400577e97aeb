#include <algorithm>
#include <map>

#include "p300/complexity.hpp"
#include "p300/error.hpp"

namespace p300::complexity {
namespace {

using namespace p300::nn;

ActivationFn fn(ActivationKind kind) { return ActivationFn{kind, 1.0}; }

// CNN-1 and CNN-3 differ only in the width of the spatial layer; the U-variants
// swap the output sigmoid for a softmax.
ArchitectureSpec cecotti(std::string name, std::size_t c, std::size_t s, std::size_t spatial,
                         ActivationKind head) {
  ArchitectureSpec a{std::move(name), c, s, {}};
  a.layers = {
      Conv1D{spatial, 1, 1, Padding::same, true, std::nullopt},
      Activation{fn(ActivationKind::stanh)},
      Conv1D{50, 13, 1, Padding::same, true, std::nullopt},
      Activation{fn(ActivationKind::stanh)},
      Flatten{},
      Dense{100, true, fn(ActivationKind::sigmoid)},
      Dense{2, true, fn(head)},
  };
  return a;
}

ArchitectureSpec cnn_r(std::size_t c, std::size_t s) {
  ArchitectureSpec a{"cnnr", c, s, {}};
  a.layers = {
      Conv1D{96, 1, 1, Padding::valid, true, std::nullopt},
      Activation{fn(ActivationKind::relu)},
      MaxPool{1, 3, 0, 2},
      Conv1D{128, 6, 1, Padding::valid, true, std::nullopt},
      Activation{fn(ActivationKind::relu)},
      MaxPool{1, 3, 0, 2},
      Conv1D{128, 6, 1, Padding::valid, true, std::nullopt},
      Activation{fn(ActivationKind::relu)},
      Flatten{},
      Dense{2048, true, fn(ActivationKind::relu)},
      Dropout{0.8},
      Dense{4096, true, fn(ActivationKind::relu)},
      Dropout{0.8},
      Dense{2, true, std::nullopt},
      Activation{fn(ActivationKind::softmax)},
  };
  return a;
}

ArchitectureSpec deep_conv_net(std::size_t c, std::size_t s) {
  ArchitectureSpec a{"deepconvnet", c, s, {}};
  a.layers = {
      Reshape{{1, c, s}},
      Conv2D{25, 1, 5, 1, 1, Padding::valid, true, std::nullopt},
      Conv2D{25, c, 1, 1, 1, Padding::valid, true, std::nullopt},
  };
  auto block_tail = [&a] {
    a.layers.push_back(BatchNorm{});
    a.layers.push_back(Activation{fn(ActivationKind::elu)});
    a.layers.push_back(MaxPool{1, 2, 1, 2});
    a.layers.push_back(Dropout{0.5});
  };
  block_tail();
  for (std::size_t filters : {50u, 100u, 200u}) {
    a.layers.push_back(Conv2D{filters, 1, 5, 1, 1, Padding::valid, true, std::nullopt});
    block_tail();
  }
  a.layers.push_back(Flatten{});
  a.layers.push_back(Dense{2, true, fn(ActivationKind::softmax)});
  return a;
}

ArchitectureSpec shallow_conv_net(std::size_t c, std::size_t s) {
  ArchitectureSpec a{"shallowconvnet", c, s, {}};
  a.layers = {
      Reshape{{1, c, s}},
      Conv2D{40, 1, 13, 1, 1, Padding::valid, true, std::nullopt},
      Conv2D{40, c, 1, 1, 1, Padding::valid, false, std::nullopt},
      BatchNorm{},
      Activation{fn(ActivationKind::square)},
      AveragePool{1, 35, 1, 7},
      Activation{fn(ActivationKind::log)},
      Dropout{0.5},
      Flatten{},
      Dense{2, true, fn(ActivationKind::softmax)},
  };
  return a;
}

ArchitectureSpec bn3(std::size_t c, std::size_t s) {
  ArchitectureSpec a{"bn3", c, s, {}};
  a.layers = {
      BatchNorm{},
      Conv1D{16, 1, 1, Padding::valid, true, fn(ActivationKind::relu)},
      Conv1D{16, 20, 20, Padding::same, true, fn(ActivationKind::relu)},
      BatchNorm{},
      Activation{fn(ActivationKind::relu)},
      Flatten{},
      Dense{128, true, fn(ActivationKind::tanh)},
      Dropout{0.8},
      Dense{128, true, fn(ActivationKind::tanh)},
      Dropout{0.8},
      Dense{1, true, fn(ActivationKind::sigmoid)},
  };
  return a;
}

ArchitectureSpec eegnet(std::size_t c, std::size_t s, const BuiltinOptions& o) {
  ArchitectureSpec a{"eegnet", c, s, {}};
  a.layers = {
      Reshape{{1, c, s}},
      Conv2D{o.eegnet_f1, 1, 64, 1, 1, Padding::same, false, std::nullopt},
      BatchNorm{},
      DepthwiseConv2D{c, 1, 1, 1, o.eegnet_depth, Padding::valid, false, std::nullopt},
      BatchNorm{},
      Activation{fn(ActivationKind::elu)},
      AveragePool{1, 4, 1, 4},
      Dropout{o.eegnet_dropout},
      SeparableConv2D{o.eegnet_f2, 1, 16, 1, 1, 1, Padding::same, false, std::nullopt},
      BatchNorm{},
      Activation{fn(ActivationKind::elu)},
      AveragePool{1, 8, 1, 8},
      Dropout{o.eegnet_dropout},
      Flatten{},
      Dense{2, true, fn(ActivationKind::softmax)},
  };
  return a;
}

ArchitectureSpec oclnn(std::size_t c, std::size_t s) {
  const SegmentLayout seg = segment_layout(s, 15);
  ArchitectureSpec a{"oclnn", c, s, {}};
  a.layers = {
      ZeroPad1D{seg.pad_left, seg.pad_right},
      Conv1D{16, seg.kernel, seg.kernel, Padding::valid, true, std::nullopt},
      Activation{fn(ActivationKind::relu)},
      Dropout{0.25},
      Flatten{},
      Dense{2, true, std::nullopt},
      Activation{fn(ActivationKind::softmax)},
  };
  return a;
}

ArchitectureSpec fcnn(std::size_t c, std::size_t s) {
  ArchitectureSpec a{"fcnn", c, s, {}};
  a.layers = {
      Reshape{{c * s}},
      Dense{2, true, fn(ActivationKind::tanh)},
      Flatten{},
      Dense{1, true, fn(ActivationKind::sigmoid)},
  };
  return a;
}

ArchitectureSpec sepconv1d(std::size_t c, std::size_t s, std::size_t filters) {
  ArchitectureSpec a{"sepconv1d", c, s, {}};
  a.layers = {
      ZeroPad1D{4, 4},
      SeparableConv1D{filters, 16, 8, 1, Padding::valid, true, std::nullopt},
      Activation{fn(ActivationKind::tanh)},
      Flatten{},
      Dense{1, true, fn(ActivationKind::sigmoid)},
  };
  return a;
}

}  // namespace

SegmentLayout segment_layout(std::size_t samples, std::size_t parts) {
  require(samples > 0 && parts > 0, ErrorCode::invalid_argument, "segment layout needs positive sizes");
  const std::size_t kernel = (samples + parts - 1) / parts;
  const std::size_t total = kernel * parts - samples;
  return {kernel, total / 2, total - total / 2};
}

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{
      "cnn1", "ucnn1", "cnn3",   "ucnn3", "cnnr", "deepconvnet", "shallowconvnet",
      "bn3",  "eegnet", "oclnn", "fcnn",  "sepconv1d"};
  return names;
}

bool is_builtin(std::string_view name) {
  const auto& names = builtin_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

ArchitectureSpec builtin_architecture(std::string_view name, std::size_t channels,
                                      std::size_t samples, const BuiltinOptions& options) {
  require(channels > 0 && samples > 0, ErrorCode::invalid_argument,
          "channels and samples must be positive");
  if (name == "cnn1") return cecotti("cnn1", channels, samples, 10, ActivationKind::sigmoid);
  if (name == "ucnn1") return cecotti("ucnn1", channels, samples, 10, ActivationKind::softmax);
  if (name == "cnn3") return cecotti("cnn3", channels, samples, 1, ActivationKind::sigmoid);
  if (name == "ucnn3") return cecotti("ucnn3", channels, samples, 1, ActivationKind::softmax);
  if (name == "cnnr") return cnn_r(channels, samples);
  if (name == "deepconvnet") return deep_conv_net(channels, samples);
  if (name == "shallowconvnet") return shallow_conv_net(channels, samples);
  if (name == "bn3") return bn3(channels, samples);
  if (name == "eegnet") return eegnet(channels, samples, options);
  if (name == "oclnn") return oclnn(channels, samples);
  if (name == "fcnn") return fcnn(channels, samples);
  if (name == "sepconv1d") return sepconv1d(channels, samples, options.sepconv_filters);

  std::string list;
  for (const auto& n : builtin_names()) list += (list.empty() ? "" : ", ") + n;
  fail(ErrorCode::unknown_architecture,
       "unknown architecture '" + std::string(name) + "'; available: " + list);
}

std::vector<ArchitectureSpec> builtin_architectures(std::size_t channels, std::size_t samples,
                                                    const BuiltinOptions& options) {
  std::vector<ArchitectureSpec> out;
  for (const auto& n : builtin_names()) out.push_back(builtin_architecture(n, channels, samples, options));
  return out;
}

// --- reference totals ---

namespace {

struct ReferenceRow {
  std::string_view name;
  std::array<std::uint64_t, 4> params;
  std::array<std::uint64_t, 4> params_alt;
  std::array<std::uint64_t, 4> flops;
};

constexpr ReferenceRow kReference[] = {
    {"cnn1", {1036922, 787502, 1207502, 1036942}, {1036922, 787502, 1207502, 1036942},
     {2073642, 1574802, 2414802, 2073682}},
    {"cnn3", {1031009, 781067, 1201067, 1031011}, {1031009, 781067, 1201067, 1031011},
     {2061816, 1561932, 2401932, 2061820}},
    {"cnnr", {19848098, 16445794, 21950818, 19848290}, {19848098, 16445794, 21950818, 19848290},
     {39683214, 32878606, 43888654, 39683598}},
    {"deepconvnet", {139877, 174927, 176927, 141127}, {140627, 175677, 177677, 141877},
     {278976, 349076, 29765, 281476}},
    {"shallowconvnet", {12082, 104322, 105282, 15282}, {12162, 104402, 105362, 15362},
     {24088, 208568, 210488, 30488}},
    {"bn3", {44589, 39489, 47681, 44625}, {44633, 39649, 47841, 44673},
     {89304, 79394, 95778, 89386}},
    {"oclnn", {1842, 11762, 16882, 2290}, {1842, 14706, 14898, 2290}, {3653, 29381, 353076, 4549}},
    {"eegnet", {1394, 2258, 2354, 1426}, {1474, 2338, 2434, 1506}, {2801, 4529, 4721, 2865}},
    {"fcnn", {2477, 19973, 30725, 3301}, {2477, 19973, 2885, 3301}, {4950, 39942, 5766, 6598}},
    {"sepconv1d", {225, 1361, 1405, 265}, {225, 1361, 1405, 265}, {443, 2715, 2803, 523}},
};

const ReferenceRow* find_reference(std::string_view name) {
  if (name == "ucnn1") name = "cnn1";
  if (name == "ucnn3") name = "cnn3";
  for (const auto& row : kReference)
    if (row.name == name) return &row;
  return nullptr;
}

}  // namespace

std::optional<std::size_t> dataset_index(std::size_t channels, std::size_t samples) {
  for (std::size_t i = 0; i < kDatasetShapes.size(); ++i)
    if (kDatasetShapes[i].channels == channels && kDatasetShapes[i].samples == samples) return i;
  return std::nullopt;
}

std::optional<std::uint64_t> reference_params(std::string_view name, std::size_t dataset) {
  const auto* row = find_reference(name);
  if (!row || dataset >= 4) return std::nullopt;
  return row->params[dataset];
}

std::optional<std::uint64_t> reference_params_alt(std::string_view name, std::size_t dataset) {
  const auto* row = find_reference(name);
  if (!row || dataset >= 4) return std::nullopt;
  return row->params_alt[dataset];
}

std::optional<std::uint64_t> reference_flops(std::string_view name, std::size_t dataset) {
  const auto* row = find_reference(name);
  if (!row || dataset >= 4) return std::nullopt;
  return row->flops[dataset];
}

}  // namespace p300::complexity
