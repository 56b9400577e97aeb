#include "p300/nn/architecture.hpp"

#include <charconv>
#include <map>
#include <sstream>

#include "p300/error.hpp"

namespace p300::nn {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr std::pair<ActivationKind, std::string_view> kActivationNames[] = {
    {ActivationKind::linear, "linear"}, {ActivationKind::log, "log"},
    {ActivationKind::square, "square"}, {ActivationKind::sigmoid, "sigmoid"},
    {ActivationKind::tanh, "tanh"},     {ActivationKind::stanh, "stanh"},
    {ActivationKind::softmax, "softmax"}, {ActivationKind::relu, "relu"},
    {ActivationKind::elu, "elu"},
};

// Parsed `key=value` pairs of one line; every key must be consumed.
class Fields {
 public:
  Fields(std::map<std::string, std::string> values, std::size_t line)
      : values_(std::move(values)), line_(line) {}

  std::optional<std::string> take(const std::string& key) {
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    std::string v = it->second;
    values_.erase(it);
    return v;
  }

  std::size_t size(const std::string& key, std::optional<std::size_t> fallback = std::nullopt) {
    auto v = take(key);
    if (!v) {
      if (fallback) return *fallback;
      error("missing key '" + key + "'");
    }
    return to_size(*v, key);
  }

  std::pair<std::size_t, std::size_t> pair(const std::string& key,
                                           std::pair<std::size_t, std::size_t> fallback) {
    auto v = take(key);
    if (!v) return fallback;
    auto x = v->find('x');
    if (x == std::string::npos) error("key '" + key + "' expects HxW");
    return {to_size(v->substr(0, x), key), to_size(v->substr(x + 1), key)};
  }

  double real(const std::string& key, double fallback) {
    auto v = take(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      double d = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument(*v);
      return d;
    } catch (const std::exception&) {
      error("key '" + key + "' expects a number, got '" + *v + "'");
    }
  }

  bool flag(const std::string& key, bool fallback) {
    auto v = take(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "1") return true;
    if (*v == "false" || *v == "0") return false;
    error("key '" + key + "' expects true/false");
  }

  Padding padding() {
    auto v = take("padding");
    if (!v || *v == "valid") return Padding::valid;
    if (*v == "same") return Padding::same;
    error("padding must be 'valid' or 'same'");
  }

  std::optional<ActivationFn> activation(const std::string& key) {
    auto v = take(key);
    if (!v) return std::nullopt;
    ActivationFn fn;
    try {
      fn.kind = parse_activation_kind(*v);
    } catch (const Error& e) {
      error(e.what());
    }
    fn.elu_alpha = real("alpha", 1.0);
    return fn;
  }

  void finish() {
    if (!values_.empty()) error("unknown key '" + values_.begin()->first + "'");
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorCode::parse, "line " + std::to_string(line_) + ": " + what);
  }

 private:
  std::size_t to_size(const std::string& s, const std::string& key) const {
    std::size_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size())
      error("key '" + key + "' expects a non-negative integer, got '" + s + "'");
    return out;
  }

  std::map<std::string, std::string> values_;
  std::size_t line_;
};

std::string padding_text(Padding p) { return p == Padding::same ? " padding=same" : ""; }

std::string activation_text(const std::optional<ActivationFn>& fn, const char* key) {
  if (!fn) return "";
  std::string out = std::string(" ") + key + "=" + std::string(to_string(fn->kind));
  if (fn->kind == ActivationKind::elu) {
    std::ostringstream os;
    os << fn->elu_alpha;
    out += " alpha=" + os.str();
  }
  return out;
}

std::string hw(std::size_t h, std::size_t w) {
  return std::to_string(h) + "x" + std::to_string(w);
}

}  // namespace

std::string_view to_string(ActivationKind kind) {
  for (const auto& [k, name] : kActivationNames)
    if (k == kind) return name;
  return "unknown";
}

ActivationKind parse_activation_kind(std::string_view name) {
  for (const auto& [k, n] : kActivationNames)
    if (n == name) return k;
  fail(ErrorCode::invalid_argument, "unknown activation '" + std::string(name) + "'");
}

std::string_view layer_name(const LayerSpec& layer) {
  return std::visit(
      overloaded{
          [](const ZeroPad1D&) { return std::string_view("ZeroPadding1D"); },
          [](const Conv1D&) { return std::string_view("Conv1D"); },
          [](const SeparableConv1D&) { return std::string_view("SeparableConv1D"); },
          [](const Conv2D&) { return std::string_view("Conv2D"); },
          [](const DepthwiseConv2D&) { return std::string_view("DepthwiseConv2D"); },
          [](const SeparableConv2D&) { return std::string_view("SeparableConv2D"); },
          [](const Dense&) { return std::string_view("Dense"); },
          [](const Flatten&) { return std::string_view("Flatten"); },
          [](const Reshape&) { return std::string_view("Reshape"); },
          [](const Activation&) { return std::string_view("Activation"); },
          [](const Dropout&) { return std::string_view("Dropout"); },
          [](const BatchNorm&) { return std::string_view("BatchNorm"); },
          [](const MaxPool&) { return std::string_view("MaxPool"); },
          [](const AveragePool&) { return std::string_view("AveragePool"); },
      },
      layer);
}

std::string_view layer_keyword(const LayerSpec& layer) {
  static constexpr std::string_view kKeywords[] = {
      "zeropad1d", "conv1d",  "separableconv1d", "conv2d",     "depthwiseconv2d",
      "separableconv2d", "dense", "flatten", "reshape", "activation",
      "dropout",   "batchnorm", "maxpool",       "averagepool"};
  return kKeywords[layer.index()];
}

std::string to_text(const ArchitectureSpec& spec) {
  std::ostringstream os;
  os << "architecture name=" << spec.name << " channels=" << spec.channels
     << " samples=" << spec.samples << "\n";
  for (const auto& layer : spec.layers) {
    os << layer_keyword(layer);
    std::visit(
        overloaded{
            [&](const ZeroPad1D& l) { os << " left=" << l.left << " right=" << l.right; },
            [&](const Conv1D& l) {
              os << " filters=" << l.filters << " kernel=" << l.kernel << " stride=" << l.stride
                 << padding_text(l.padding) << (l.use_bias ? "" : " bias=false")
                 << activation_text(l.activation, "activation");
            },
            [&](const SeparableConv1D& l) {
              os << " filters=" << l.filters << " kernel=" << l.kernel << " stride=" << l.stride;
              if (l.depth_multiplier != 1) os << " depth_multiplier=" << l.depth_multiplier;
              os << padding_text(l.padding) << (l.use_bias ? "" : " bias=false")
                 << activation_text(l.activation, "activation");
            },
            [&](const Conv2D& l) {
              os << " filters=" << l.filters << " kernel=" << hw(l.kernel_h, l.kernel_w)
                 << " stride=" << hw(l.stride_h, l.stride_w) << padding_text(l.padding)
                 << (l.use_bias ? "" : " bias=false") << activation_text(l.activation, "activation");
            },
            [&](const DepthwiseConv2D& l) {
              os << " kernel=" << hw(l.kernel_h, l.kernel_w) << " stride=" << hw(l.stride_h, l.stride_w)
                 << " depth_multiplier=" << l.depth_multiplier << padding_text(l.padding)
                 << (l.use_bias ? "" : " bias=false") << activation_text(l.activation, "activation");
            },
            [&](const SeparableConv2D& l) {
              os << " filters=" << l.filters << " kernel=" << hw(l.kernel_h, l.kernel_w)
                 << " stride=" << hw(l.stride_h, l.stride_w);
              if (l.depth_multiplier != 1) os << " depth_multiplier=" << l.depth_multiplier;
              os << padding_text(l.padding) << (l.use_bias ? "" : " bias=false")
                 << activation_text(l.activation, "activation");
            },
            [&](const Dense& l) {
              os << " units=" << l.units << (l.use_bias ? "" : " bias=false")
                 << activation_text(l.activation, "activation");
            },
            [&](const Flatten&) {},
            [&](const Reshape& l) {
              os << " dims=";
              for (std::size_t i = 0; i < l.dims.size(); ++i) os << (i ? "," : "") << l.dims[i];
            },
            [&](const Activation& l) { os << activation_text(l.fn, "fn"); },
            [&](const Dropout& l) { os << " rate=" << l.rate; },
            [&](const BatchNorm&) {},
            [&](const MaxPool& l) {
              os << " pool=" << hw(l.pool_h, l.pool_w) << " stride=" << hw(l.stride_h, l.stride_w);
            },
            [&](const AveragePool& l) {
              os << " pool=" << hw(l.pool_h, l.pool_w) << " stride=" << hw(l.stride_h, l.stride_w);
            },
        },
        layer);
    os << "\n";
  }
  return os.str();
}

ArchitectureSpec parse_architecture(std::string_view text) {
  ArchitectureSpec spec;
  bool have_header = false;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::string keyword;
    if (!(words >> keyword)) continue;
    std::map<std::string, std::string> kv;
    std::string token;
    while (words >> token) {
      auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0)
        fail(ErrorCode::parse, "line " + std::to_string(line_no) + ": expected key=value, got '" +
                                   token + "'");
      if (!kv.emplace(token.substr(0, eq), token.substr(eq + 1)).second)
        fail(ErrorCode::parse,
             "line " + std::to_string(line_no) + ": duplicate key '" + token.substr(0, eq) + "'");
    }
    Fields f(std::move(kv), line_no);

    if (keyword == "architecture") {
      if (have_header) f.error("duplicate architecture header");
      auto name = f.take("name");
      if (!name) f.error("architecture header needs name=");
      spec.name = *name;
      spec.channels = f.size("channels");
      spec.samples = f.size("samples");
      f.finish();
      have_header = true;
      continue;
    }
    if (!have_header) f.error("layer before the architecture header");

    if (keyword == "zeropad1d") {
      ZeroPad1D l;
      const std::size_t both = f.size("pad", 0);
      l.left = f.size("left", both);
      l.right = f.size("right", both);
      spec.layers.emplace_back(l);
    } else if (keyword == "conv1d") {
      Conv1D l;
      l.filters = f.size("filters");
      l.kernel = f.size("kernel");
      l.stride = f.size("stride", 1);
      l.padding = f.padding();
      l.use_bias = f.flag("bias", true);
      l.activation = f.activation("activation");
      spec.layers.emplace_back(l);
    } else if (keyword == "separableconv1d") {
      SeparableConv1D l;
      l.filters = f.size("filters");
      l.kernel = f.size("kernel");
      l.stride = f.size("stride", 1);
      l.depth_multiplier = f.size("depth_multiplier", 1);
      l.padding = f.padding();
      l.use_bias = f.flag("bias", true);
      l.activation = f.activation("activation");
      spec.layers.emplace_back(l);
    } else if (keyword == "conv2d") {
      Conv2D l;
      l.filters = f.size("filters");
      std::tie(l.kernel_h, l.kernel_w) = f.pair("kernel", {1, 1});
      std::tie(l.stride_h, l.stride_w) = f.pair("stride", {1, 1});
      l.padding = f.padding();
      l.use_bias = f.flag("bias", true);
      l.activation = f.activation("activation");
      spec.layers.emplace_back(l);
    } else if (keyword == "depthwiseconv2d") {
      DepthwiseConv2D l;
      std::tie(l.kernel_h, l.kernel_w) = f.pair("kernel", {1, 1});
      std::tie(l.stride_h, l.stride_w) = f.pair("stride", {1, 1});
      l.depth_multiplier = f.size("depth_multiplier", 1);
      l.padding = f.padding();
      l.use_bias = f.flag("bias", true);
      l.activation = f.activation("activation");
      spec.layers.emplace_back(l);
    } else if (keyword == "separableconv2d") {
      SeparableConv2D l;
      l.filters = f.size("filters");
      std::tie(l.kernel_h, l.kernel_w) = f.pair("kernel", {1, 1});
      std::tie(l.stride_h, l.stride_w) = f.pair("stride", {1, 1});
      l.depth_multiplier = f.size("depth_multiplier", 1);
      l.padding = f.padding();
      l.use_bias = f.flag("bias", true);
      l.activation = f.activation("activation");
      spec.layers.emplace_back(l);
    } else if (keyword == "dense") {
      Dense l;
      l.units = f.size("units");
      l.use_bias = f.flag("bias", true);
      l.activation = f.activation("activation");
      spec.layers.emplace_back(l);
    } else if (keyword == "flatten") {
      spec.layers.emplace_back(Flatten{});
    } else if (keyword == "reshape") {
      Reshape l;
      auto dims = f.take("dims");
      if (!dims) f.error("reshape needs dims=");
      std::istringstream ds(*dims);
      std::string part;
      while (std::getline(ds, part, ',')) {
        std::size_t v = 0;
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (ec != std::errc{} || ptr != part.data() + part.size()) f.error("bad reshape dims");
        l.dims.push_back(v);
      }
      spec.layers.emplace_back(l);
    } else if (keyword == "activation") {
      auto fn = f.activation("fn");
      if (!fn) f.error("activation needs fn=");
      spec.layers.emplace_back(Activation{*fn});
    } else if (keyword == "dropout") {
      spec.layers.emplace_back(Dropout{f.real("rate", 0.5)});
    } else if (keyword == "batchnorm") {
      spec.layers.emplace_back(BatchNorm{});
    } else if (keyword == "maxpool" || keyword == "averagepool") {
      std::pair<std::size_t, std::size_t> pool{1, 2};
      auto p = f.take("pool");
      if (p && p->find('x') == std::string::npos) {
        pool = {1, Fields({{"pool", *p}}, line_no).size("pool")};
      } else if (p) {
        Fields tmp({{"pool", *p}}, line_no);
        pool = tmp.pair("pool", pool);
      }
      std::pair<std::size_t, std::size_t> stride{0, 0};
      auto s = f.take("stride");
      if (s && s->find('x') == std::string::npos) {
        stride = {0, Fields({{"stride", *s}}, line_no).size("stride")};
      } else if (s) {
        Fields tmp({{"stride", *s}}, line_no);
        stride = tmp.pair("stride", stride);
      }
      if (keyword == "maxpool")
        spec.layers.emplace_back(MaxPool{pool.first, pool.second, stride.first, stride.second});
      else
        spec.layers.emplace_back(AveragePool{pool.first, pool.second, stride.first, stride.second});
    } else {
      f.error("unknown layer kind '" + keyword + "'");
    }
    f.finish();
  }
  if (!have_header) fail(ErrorCode::parse, "missing architecture header line");
  return spec;
}

std::string format_shape(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

}  // namespace p300::nn
