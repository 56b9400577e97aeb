#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "p300/error.hpp"
#include "p300/signal.hpp"

namespace p300::signal {
namespace {

using cplx = std::complex<double>;

std::vector<double> poly_multiply(std::span<const double> p, std::span<const double> q) {
  std::vector<double> out(p.size() + q.size() - 1, 0.0);
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < q.size(); ++j) out[i + j] += p[i] * q[j];
  return out;
}

// Evaluates sum_k c[k] z^{-k}.
cplx eval_in_inverse_powers(std::span<const double> c, cplx z_inv) {
  cplx acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) acc = acc * z_inv + c[k];
  return acc;
}

void require_finite(std::span<const double> x, const char* what) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]))
      fail(ErrorCode::numeric, std::string("non-finite value in ") + what + " at sample " +
                                   std::to_string(i));
  }
}

std::size_t transfer_order(const IirFilter& f) {
  if (!f.sections.empty()) return 2 * f.sections.size();
  return std::max(f.a.size(), f.b.size()) - 1;
}

}  // namespace

std::complex<double> IirFilter::response_at(double omega) const {
  const cplx z_inv = std::polar(1.0, -omega);
  if (!sections.empty()) {
    cplx h = 1.0;
    for (const auto& s : sections)
      h *= eval_in_inverse_powers(s.b, z_inv) / eval_in_inverse_powers(s.a, z_inv);
    return h;
  }
  return eval_in_inverse_powers(b, z_inv) / eval_in_inverse_powers(a, z_inv);
}

std::complex<double> IirFilter::response(double freq_hz) const {
  require(sample_rate_hz > 0.0, ErrorCode::invalid_argument,
          "frequency response needs a sample rate");
  return response_at(2.0 * std::numbers::pi * freq_hz / sample_rate_hz);
}

std::vector<std::complex<double>> IirFilter::poles() const {
  if (sections.empty()) return polynomial_roots(a);
  std::vector<cplx> out;
  for (const auto& s : sections) {
    // z^2 + a1 z + a2
    const double a1 = s.a[1];
    const double a2 = s.a[2];
    const cplx disc = std::sqrt(cplx(a1 * a1 - 4.0 * a2, 0.0));
    out.push_back((-a1 + disc) / 2.0);
    out.push_back((-a1 - disc) / 2.0);
  }
  return out;
}

bool IirFilter::is_stable() const {
  const auto ps = poles();
  return std::all_of(ps.begin(), ps.end(), [](cplx p) { return std::abs(p) < 1.0; });
}

IirFilter make_filter(std::vector<double> b, std::vector<double> a) {
  require(!b.empty() && !a.empty(), ErrorCode::invalid_argument, "filter coefficients are empty");
  require(a[0] != 0.0, ErrorCode::invalid_argument, "a[0] must be nonzero");
  require_finite(b, "filter b coefficients");
  require_finite(a, "filter a coefficients");
  const double a0 = a[0];
  for (double& v : b) v /= a0;
  for (double& v : a) v /= a0;
  a[0] = 1.0;
  IirFilter f;
  f.order = static_cast<int>(std::max(a.size(), b.size()) - 1);
  f.b = std::move(b);
  f.a = std::move(a);
  return f;
}

IirFilter design_butterworth_bandpass(int order, double low_hz, double high_hz,
                                      double sample_rate_hz) {
  require(order >= 1, ErrorCode::invalid_argument, "filter order must be at least 1");
  require(sample_rate_hz > 0.0, ErrorCode::invalid_argument, "sample rate must be positive");
  require(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate_hz / 2.0,
          ErrorCode::invalid_argument,
          "band edges must satisfy 0 < low < high < sample_rate/2 (got low=" +
              std::to_string(low_hz) + " high=" + std::to_string(high_hz) +
              " rate=" + std::to_string(sample_rate_hz) + ")");

  const double pi = std::numbers::pi;
  const double fs2 = 2.0 * sample_rate_hz;
  const double w_low = fs2 * std::tan(pi * low_hz / sample_rate_hz);
  const double w_high = fs2 * std::tan(pi * high_hz / sample_rate_hz);
  const double bandwidth = w_high - w_low;
  const double w_center_sq = w_low * w_high;

  // Bandpass analog poles, then bilinear map to z.
  std::vector<cplx> upper;
  std::vector<double> real;
  for (int k = 0; k < order; ++k) {
    const cplx proto = std::polar(1.0, pi * (2.0 * k + 1.0 + order) / (2.0 * order));
    const cplx half = proto * (bandwidth / 2.0);
    const cplx root = std::sqrt(half * half - w_center_sq);
    for (const cplx s : {half + root, half - root}) {
      const cplx z = (fs2 + s) / (fs2 - s);
      if (std::abs(z.imag()) <= 1e-14 * std::abs(z)) {
        real.push_back(z.real());
      } else if (z.imag() > 0.0) {
        upper.push_back(z);
      }
    }
  }
  require(real.size() % 2 == 0 && upper.size() * 2 + real.size() == 2 * static_cast<std::size_t>(order),
          ErrorCode::numeric, "pole pairing failed during filter design");
  std::sort(real.begin(), real.end());

  IirFilter f;
  f.order = order;
  f.low_hz = low_hz;
  f.high_hz = high_hz;
  f.sample_rate_hz = sample_rate_hz;
  for (const cplx p : upper) {
    SecondOrderSection s;
    s.b = {1.0, 0.0, -1.0};
    s.a = {1.0, -2.0 * p.real(), std::norm(p)};
    f.sections.push_back(s);
  }
  for (std::size_t i = 0; i < real.size(); i += 2) {
    SecondOrderSection s;
    s.b = {1.0, 0.0, -1.0};
    s.a = {1.0, -(real[i] + real[i + 1]), real[i] * real[i + 1]};
    f.sections.push_back(s);
  }

  // Unit gain at the (pre-warped) center frequency, where the analog response is exactly 1.
  const double omega_center = 2.0 * std::atan(std::sqrt(w_center_sq) / fs2);
  const cplx h_center = f.response_at(omega_center);
  const double gain = (h_center.real() < 0.0 ? -1.0 : 1.0) / std::abs(h_center);
  const double per_section = std::pow(std::abs(gain), 1.0 / static_cast<double>(f.sections.size()));
  for (std::size_t i = 0; i < f.sections.size(); ++i) {
    const double g = (i == 0 && gain < 0.0) ? -per_section : per_section;
    for (double& c : f.sections[i].b) c *= g;
  }

  std::vector<double> b{1.0};
  std::vector<double> a{1.0};
  for (const auto& s : f.sections) {
    b = poly_multiply(b, s.b);
    a = poly_multiply(a, s.a);
  }
  for (double v : b)
    require(std::isfinite(v), ErrorCode::numeric, "filter order too high: b coefficients overflow");
  for (double v : a)
    require(std::isfinite(v), ErrorCode::numeric, "filter order too high: a coefficients overflow");
  f.b = std::move(b);
  f.a = std::move(a);
  require(f.is_stable(), ErrorCode::numeric, "designed filter is unstable at this order");
  return f;
}

std::vector<double> filter_signal(const IirFilter& filter, std::span<const double> x) {
  require_finite(x, "filter input");
  require(x.size() > transfer_order(filter), ErrorCode::invalid_argument,
          "signal of length " + std::to_string(x.size()) + " is not longer than the filter order " +
              std::to_string(transfer_order(filter)));
  std::vector<double> y(x.begin(), x.end());

  if (!filter.sections.empty()) {
    for (const auto& s : filter.sections) {
      double w1 = 0.0;
      double w2 = 0.0;
      for (double& v : y) {
        const double in = v;
        const double out = s.b[0] * in + w1;
        w1 = s.b[1] * in - s.a[1] * out + w2;
        w2 = s.b[2] * in - s.a[2] * out;
        v = out;
      }
    }
    return y;
  }

  // Transposed direct form II over the full polynomials.
  const std::size_t n = std::max(filter.a.size(), filter.b.size());
  std::vector<double> bb(n, 0.0);
  std::vector<double> aa(n, 0.0);
  std::copy(filter.b.begin(), filter.b.end(), bb.begin());
  std::copy(filter.a.begin(), filter.a.end(), aa.begin());
  std::vector<double> state(n, 0.0);
  for (double& v : y) {
    const double in = v;
    const double out = bb[0] * in + state[0];
    for (std::size_t k = 1; k < n; ++k) {
      state[k - 1] = bb[k] * in - aa[k] * out + (k + 1 < n ? state[k] : 0.0);
    }
    v = out;
  }
  return y;
}

ContinuousRecording apply_iir_filter(const IirFilter& filter, const ContinuousRecording& recording) {
  ContinuousRecording out = recording;
  for (std::size_t c = 0; c < recording.channels; ++c) {
    const auto y = filter_signal(filter, recording.row(c));
    std::copy(y.begin(), y.end(), out.row(c).begin());
  }
  return out;
}

EpochSet apply_iir_filter(const IirFilter& filter, const EpochSet& epochs) {
  EpochSet out = epochs;
  for (std::size_t i = 0; i < epochs.n_trials; ++i) {
    for (std::size_t c = 0; c < epochs.channels; ++c) {
      const auto y = filter_signal(filter, epochs.row(i, c));
      std::copy(y.begin(), y.end(), out.row(i, c).begin());
    }
  }
  return out;
}

std::vector<std::complex<double>> polynomial_roots(std::span<const double> coeffs) {
  std::size_t lead = 0;
  while (lead < coeffs.size() && coeffs[lead] == 0.0) ++lead;
  require(lead < coeffs.size(), ErrorCode::invalid_argument, "zero polynomial has no roots");
  std::vector<double> monic(coeffs.begin() + static_cast<std::ptrdiff_t>(lead), coeffs.end());
  const double c0 = monic[0];
  for (double& v : monic) v /= c0;
  const std::size_t degree = monic.size() - 1;
  if (degree == 0) return {};

  auto eval = [&](cplx z) {
    cplx p = 1.0;
    cplx dp = 0.0;
    for (std::size_t k = 1; k <= degree; ++k) {
      dp = dp * z + p;
      p = p * z + monic[k];
    }
    return std::pair{p, dp};
  };

  // Aberth-Ehrlich iteration from points on a circle bounding the roots.
  double bound = 0.0;
  for (std::size_t k = 1; k <= degree; ++k) bound = std::max(bound, std::abs(monic[k]));
  const double radius = 1.0 + bound;
  std::vector<cplx> roots(degree);
  for (std::size_t k = 0; k < degree; ++k)
    roots[k] = std::polar(radius * 0.5, 2.0 * std::numbers::pi * (k + 0.25) / degree + 0.4);

  for (int iter = 0; iter < 500; ++iter) {
    double largest_step = 0.0;
    for (std::size_t i = 0; i < degree; ++i) {
      const auto [p, dp] = eval(roots[i]);
      if (p == 0.0) continue;
      const cplx ratio = p / dp;
      cplx repulsion = 0.0;
      for (std::size_t j = 0; j < degree; ++j)
        if (j != i) repulsion += 1.0 / (roots[i] - roots[j]);
      const cplx step = ratio / (1.0 - ratio * repulsion);
      roots[i] -= step;
      largest_step = std::max(largest_step, std::abs(step) / std::max(1.0, std::abs(roots[i])));
    }
    if (largest_step < 1e-15) break;
  }
  return roots;
}

}  // namespace p300::signal
