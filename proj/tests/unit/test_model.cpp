#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "p300/complexity.hpp"
#include "p300/error.hpp"
#include "p300/nn/model.hpp"

using namespace p300;
using namespace p300::nn;

namespace {

const char* const kTrainable[] = {"sepconv1d", "fcnn", "oclnn"};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::invalid_argument;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("instantiated parameter totals agree with the analytical counts") {
  for (const char* name : kTrainable)
    for (const auto& d : complexity::kDatasetShapes) {
      CAPTURE(name);
      CAPTURE(d.name);
      const ArchitectureSpec spec = complexity::builtin_architecture(name, d.channels, d.samples);
      const Model model(spec, 1);
      CHECK(model.state().size() == complexity::count_params(spec).total_params);
      CHECK(model.layer_shapes() == complexity::infer_shapes(spec));
    }
  const Model sep(complexity::builtin_architecture("sepconv1d", 6, 206), 1);
  CHECK(sep.state().size() == 225);
  CHECK(sep.state().blocks.size() == 5);
}

TEST_CASE("forward output matches the inferred final shape") {
  Rng rng(3);
  for (const char* name : kTrainable) {
    const ArchitectureSpec spec = complexity::builtin_architecture(name, 6, 206);
    Model model(spec, 2);
    const auto trial = test::normals(rng, 6 * 206);
    const auto y = model.predict(trial);
    CHECK(y.size() == model.output_size());
    std::size_t expected = 1;
    const auto shapes = complexity::infer_shapes(spec);
    for (std::size_t d : shapes.back()) expected *= d;
    CHECK(y.size() == expected);
    const double s = model.score(trial);
    CHECK((s > 0.0 && s < 1.0));
  }
}

TEST_CASE("fcnn with zero weights outputs one half") {
  Model model(complexity::builtin_architecture("fcnn", 6, 206), 4);
  std::fill(model.state().params.begin(), model.state().params.end(), 0.0);
  Rng rng(5);
  for (int i = 0; i < 5; ++i) CHECK(model.score(test::normals(rng, 6 * 206, 10.0)) == 0.5);
}

TEST_CASE("biases start at zero and initialization is deterministic") {
  const ArchitectureSpec spec = complexity::builtin_architecture("sepconv1d", 6, 206);
  const Model a(spec, 11), b(spec, 11), c(spec, 12);
  CHECK(a.state().params == b.state().params);
  CHECK(a.state().params != c.state().params);
  for (std::size_t i = 0; i < a.state().blocks.size(); ++i) {
    const auto& block = a.state().blocks[i];
    if (block.name.ends_with("/bias"))
      for (double v : a.state().block(i)) CHECK(v == 0.0);
  }
}

TEST_CASE("full-model gradients match finite differences") {
  Rng rng(2718);
  for (const char* name : kTrainable) {
    CAPTURE(name);
    const ArchitectureSpec spec = complexity::builtin_architecture(name, 3, 45);
    Model model(spec, 17);
    auto& params = model.state().params;
    // Small random biases so that no block sits exactly at zero.
    for (double& p : params) p += 0.05 * rng.normal();
    auto trial = test::normals(rng, 3 * 45);
    const auto upstream = test::normals(rng, model.output_size());
    // Dropout masks are redrawn from the same seed on every pass.
    auto loss = [&] {
      Rng dropout(99);
      return test::dot(upstream, model.forward(trial, true, dropout));
    };
    Rng dropout(99);
    model.forward(trial, true, dropout);
    model.zero_grad();
    model.backward(upstream);
    const std::vector<double> grads = model.state().grads;
    const std::vector<double> input_grad(model.input_grad().begin(), model.input_grad().end());

    double worst = 0;
    for (std::size_t i = 0; i < params.size(); ++i)
      worst = std::max(worst, test::rel_error(grads[i], test::central_difference(params, i, loss)));
    CHECK(worst < 1e-5);
    double worst_input = 0;
    REQUIRE(input_grad.size() == trial.size());
    for (std::size_t i = 0; i < trial.size(); ++i)
      worst_input = std::max(worst_input, test::rel_error(input_grad[i], test::central_difference(trial, i, loss)));
    CHECK(worst_input < 1e-5);
  }
}

TEST_CASE("gradients accumulate until zero_grad") {
  Model model(complexity::builtin_architecture("fcnn", 3, 45), 3);
  Rng rng(8);
  const auto trial = test::normals(rng, 135);
  const std::vector<double> up{1.0};
  model.predict(trial);
  model.zero_grad();
  model.backward(up);
  const auto once = model.state().grads;
  model.backward(up);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(model.state().grads[i] == doctest::Approx(2 * once[i]));
  model.zero_grad();
  for (double g : model.state().grads) CHECK(g == 0.0);
}

TEST_CASE("dropout masks are deterministic per seed and inactive at inference") {
  Model model(complexity::builtin_architecture("oclnn", 6, 206), 1);
  Rng rng(2);
  const auto trial = test::normals(rng, 6 * 206);
  auto run = [&](bool training, std::uint64_t seed) {
    Rng dropout(seed);
    const auto y = model.forward(trial, training, dropout);
    return std::vector<double>(y.begin(), y.end());
  };
  CHECK(run(true, 5) == run(true, 5));
  CHECK(run(false, 5) == run(false, 6));
  CHECK(run(true, 5) != run(false, 5));
  CHECK(run(true, 5) != run(true, 6));
}

TEST_CASE("analysis-only architectures are rejected") {
  for (const char* name : {"eegnet", "bn3", "deepconvnet", "shallowconvnet", "cnn1"}) {
    CAPTURE(name);
    const auto spec = complexity::builtin_architecture(name, 6, 206);
    CHECK(code_of([&] { Model m(spec, 1); }) == ErrorCode::analysis_only);
  }
  try {
    Model m(complexity::builtin_architecture("eegnet", 6, 206), 1);
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("analysis-only") != std::string::npos);
  }
}

TEST_CASE("network heads must be a single sigmoid or a two-way softmax") {
  ArchitectureSpec spec{"tiny", 2, 10, {Flatten{}, Dense{3, true, ActivationFn{ActivationKind::sigmoid}}}};
  CHECK_THROWS_AS(Model(spec, 1), Error);
  spec.layers.back() = Dense{1, true, ActivationFn{ActivationKind::tanh}};
  CHECK_THROWS_AS(Model(spec, 1), Error);
  spec.layers.back() = Dense{1, true, ActivationFn{ActivationKind::sigmoid}};
  CHECK(Model(spec, 1).head() == Head::sigmoid);
  spec.layers.back() = Dense{2, true, ActivationFn{ActivationKind::softmax}};
  CHECK(Model(spec, 1).head() == Head::softmax);
}

TEST_CASE("trial size is checked") {
  Model model(complexity::builtin_architecture("fcnn", 6, 206), 1);
  CHECK_THROWS_AS(model.predict(std::vector<double>(10)), Error);
}

}  // TEST_SUITE
