#include "dpacct/hp_numeric.h"

#include <algorithm>
#include <cstdlib>
#include <ios>
#include <regex>
#include <thread>

namespace dpacct {

namespace {

constexpr long kThetaCap = 10000;
constexpr std::int64_t kBooleChunks = 256;

}  // namespace

void set_precision(unsigned digits10) {
  if (digits10 < 20) throw SpecError("precision must be at least 20 digits");
  HPReal::default_precision(digits10);
}

unsigned precision() { return HPReal::default_precision(); }

unsigned precision_from_env(unsigned fallback) {
  const char* env = std::getenv("ACCOUNTANT_PRECISION");
  if (env == nullptr || *env == '\0') return fallback;
  char* end = nullptr;
  long v = std::strtol(env, &end, 10);
  if (end == env || *end != '\0' || v < 20 || v > 100000)
    throw SpecError(std::string("invalid ACCOUNTANT_PRECISION: ") + env);
  return static_cast<unsigned>(v);
}

HPReal series_tolerance() {
  HPReal ten(10);
  return pow(ten, -static_cast<int>(precision() + 10));
}

ScopedPrecision::ScopedPrecision(unsigned digits10) : saved_(precision()) {
  HPReal::default_precision(digits10);
}

ScopedPrecision::~ScopedPrecision() { HPReal::default_precision(saved_); }

HPReal hp_pi() {
  HPReal pi;
  mpfr_const_pi(pi.backend().data(), MPFR_RNDN);
  return pi;
}

HPReal hp(const std::string& decimal) {
  static const std::regex number(R"(^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$)");
  if (!std::regex_match(decimal, number)) throw SpecError("expected a decimal number, got '" + decimal + "'");
  return HPReal(decimal);
}
HPReal hp(double v) { return HPReal(v); }
HPReal hp(long long v) { return HPReal(v); }

namespace {

// Shared series driver. minus_one selects sum 4 q^{k^2} sinh^2(kx) in the numerator.
ThetaValue theta_series(const HPReal& x, const HPReal& lambda, const HPReal& tol, bool minus_one) {
  if (!(lambda > 0)) throw DomainError("theta3_ratio: q must lie in (0,1)");
  if (!(tol > 0)) throw DomainError("theta3_ratio: tol must be positive");
  HPReal ax = abs(x);
  // Terms e^{-lambda k^2 + 2k|x|} peak at k = |x|/lambda; only stop past the peak.
  HPReal peak = ax / lambda;
  HPReal num = minus_one ? HPReal(0) : HPReal(1);
  HPReal den = 1;
  bool num_done = false;
  bool den_done = false;
  long k = 1;
  for (; k <= kThetaCap; ++k) {
    HPReal kk(k);
    HPReal g = exp(-lambda * kk * kk);
    HPReal term;
    if (minus_one) {
      HPReal s = sinh(kk * ax);
      term = 4 * g * s * s;
    } else {
      term = exp(-lambda * kk * kk + 2 * kk * ax) + exp(-lambda * kk * kk - 2 * kk * ax);
    }
    num += term;
    den += 2 * g;
    bool past_peak = kk > peak;
    if (past_peak && term <= tol * num) num_done = true;
    if (2 * g <= tol * den) den_done = true;
    if (num_done && den_done) break;
    if (minus_one && term == 0 && past_peak) num_done = true;
  }
  if (k > kThetaCap) throw DomainError("theta3_ratio: series did not converge within 10^4 terms");
  return ThetaValue{num / den, k};
}

}  // namespace

ThetaValue theta3_ratio(const HPReal& x, const HPReal& q, const HPReal& tol) {
  if (!(q > 0) || !(q < 1)) throw DomainError("theta3_ratio: q must lie in (0,1)");
  return theta_series(x, -log(q), tol, false);
}

ThetaValue theta3_ratio_lambda(const HPReal& x, const HPReal& lambda, const HPReal& tol) {
  return theta_series(x, lambda, tol, false);
}

ThetaValue theta3_ratio_minus_one(const HPReal& x, const HPReal& lambda, const HPReal& tol) {
  return theta_series(x, lambda, tol, true);
}

HPReal gaussian_tail_upper(const HPReal& x) {
  if (!(x > 0)) throw DomainError("gaussian_tail_upper: x must be positive");
  return exp(-x * x / 2) / x;
}

HPReal BooleQuadratureSpec::h() const { return (b - a) / HPReal(N - 1); }

void BooleQuadratureSpec::validate() const {
  if (N < 5) throw SpecError("Boole quadrature needs N >= 5");
  if ((N - 1) % 4 != 0) throw SpecError("Boole quadrature needs (N-1) divisible by 4");
  if (!(b > a)) throw SpecError("Boole quadrature needs b > a");
}

HPReal boole_error_bound(const BooleQuadratureSpec& spec, const HPReal& M6) {
  HPReal h = spec.h();
  return HPReal(2) / 945 * M6 * pow(h, 6) * (spec.b - spec.a);
}

namespace {

int boole_weight(std::int64_t j, std::int64_t N) {
  if (j == 0 || j == N - 1) return 7;
  if (j % 2 == 1) return 32;
  return (j % 4 == 2) ? 12 : 14;
}

}  // namespace

std::vector<HPReal> boole_sum_many(const VectorFn& f, std::size_t width,
                                   const BooleQuadratureSpec& spec, unsigned threads) {
  spec.validate();
  const std::int64_t N = spec.N;
  const HPReal h = spec.h();
  const std::int64_t chunks = std::min<std::int64_t>(kBooleChunks, N);
  std::vector<std::vector<HPReal>> partial(chunks, std::vector<HPReal>(width, HPReal(0)));

  auto run_chunk = [&](std::int64_t c) {
    std::int64_t lo = N * c / chunks;
    std::int64_t hi = N * (c + 1) / chunks;
    std::vector<HPReal> out(width);
    auto& acc = partial[c];
    for (std::int64_t j = lo; j < hi; ++j) {
      HPReal t = (j == N - 1) ? spec.b : spec.a + HPReal(j) * h;
      f(t, out);
      int w = boole_weight(j, N);
      for (std::size_t i = 0; i < width; ++i) acc[i] += w * out[i];
    }
  };

  unsigned nt = std::max(1u, threads);
  if (nt == 1) {
    for (std::int64_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < nt; ++w) {
      pool.emplace_back([&, w] {
        for (std::int64_t c = w; c < chunks; c += nt) run_chunk(c);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<HPReal> total(width, HPReal(0));
  for (std::int64_t c = 0; c < chunks; ++c)
    for (std::size_t i = 0; i < width; ++i) total[i] += partial[c][i];
  HPReal scale = 2 * h / 45;
  for (auto& v : total) v *= scale;
  return total;
}

BooleResult boole_integrate(const ScalarFn& f, const BooleQuadratureSpec& spec, const HPReal& M6,
                            unsigned threads) {
  auto vec = [&f](const HPReal& t, std::vector<HPReal>& out) { out[0] = f(t); };
  auto sums = boole_sum_many(vec, 1, spec, threads);
  return BooleResult{sums[0], boole_error_bound(spec, M6)};
}

std::string to_sci(const HPReal& v, int digits) {
  return v.str(digits - 1, std::ios_base::scientific);
}

}  // namespace dpacct
