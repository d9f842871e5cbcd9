#include "dpacct/dgauss.h"

#include <algorithm>
#include <cmath>

namespace dpacct {

namespace {

constexpr std::int64_t kWalkCap = 50'000'000;
// Beyond this many digits direct sums are not attempted; closed forms take over.
constexpr unsigned kMaxResolvingDigits = 20000;

std::int64_t to_i64(const HPReal& v) {
  if (abs(v) > HPReal(4e18)) throw DomainError("lattice index out of range");
  return v.convert_to<long long>();
}

HPReal round_to_working(const HPReal& v) { return HPReal(v, precision()); }

// sums[p] = sum_x w(x) (x - c)^p, w(x) = e^{-(x-mu)^2/(2 s2)}, p = 0..P.
// Weights advance by the ratio recurrence, so no exp per term.
std::vector<HPReal> lattice_moment_sums(const HPReal& mu, const HPReal& s2, int P, const HPReal& c) {
  const HPReal tol = series_tolerance();
  const std::int64_t x0 = to_i64(round(mu));
  const HPReal d = exp(-1 / s2);
  const HPReal w0 = exp(-(HPReal(x0) - mu) * (HPReal(x0) - mu) / (2 * s2));
  const HPReal reach = sqrt(HPReal(P) * s2) + 2;

  std::vector<HPReal> sums(P + 1, HPReal(0));
  std::vector<HPReal> abs_sums(P + 1, HPReal(0));
  auto accumulate = [&](std::int64_t x, const HPReal& w) {
    HPReal y = HPReal(x) - c;
    HPReal ay = abs(y);
    HPReal pw = w;
    HPReal apw = w;
    bool small = true;
    for (int p = 0; p <= P; ++p) {
      sums[p] += pw;
      abs_sums[p] += apw;
      if (apw > tol * abs_sums[p]) small = false;
      pw *= y;
      apw *= ay;
    }
    return small;
  };

  accumulate(x0, w0);
  // Right walk.
  HPReal w = w0;
  HPReal r = exp(-(2 * (HPReal(x0) - mu) + 1) / (2 * s2));
  for (std::int64_t x = x0 + 1, steps = 0;; ++x, ++steps) {
    if (steps > kWalkCap) throw DomainError("lattice sum did not converge");
    w *= r;
    r *= d;
    bool small = accumulate(x, w);
    if (small && HPReal(x) - mu > reach) break;
  }
  // Left walk.
  w = w0;
  HPReal rl = exp((2 * (HPReal(x0) - mu) - 1) / (2 * s2));
  for (std::int64_t x = x0 - 1, steps = 0;; --x, ++steps) {
    if (steps > kWalkCap) throw DomainError("lattice sum did not converge");
    w *= rl;
    rl *= d;
    bool small = accumulate(x, w);
    if (small && mu - HPReal(x) > reach) break;
  }
  return sums;
}

void require_positive(const HPReal& sigma2) {
  if (!(sigma2 > 0)) throw DomainError("discrete Gaussian needs sigma2 > 0");
}

}  // namespace

unsigned resolving_digits(const HPReal& sigma2) {
  HPReal pi = hp_pi();
  HPReal extra = 2 * pi * pi * sigma2 / log(HPReal(10));
  double e = extra.convert_to<double>();
  double want = precision() + 30.0 + std::ceil(e);
  if (want > kMaxResolvingDigits) return kMaxResolvingDigits;
  return static_cast<unsigned>(want);
}

HPReal normalizer(const HPReal& mu, const HPReal& sigma2) {
  require_positive(sigma2);
  return lattice_moment_sums(mu, sigma2, 0, mu)[0];
}

HPReal normalizer_poisson(const HPReal& mu, const HPReal& sigma2) {
  require_positive(sigma2);
  const HPReal tol = series_tolerance();
  HPReal pi = hp_pi();
  HPReal lam = 2 * pi * pi * sigma2;
  HPReal s = 1;
  for (long k = 1;; ++k) {
    if (k > 100000) throw DomainError("Poisson normalizer did not converge");
    HPReal g = exp(-lam * k * k);
    s += 2 * g * cos(2 * pi * k * mu);
    if (g < tol * abs(s)) break;
  }
  return sqrt(2 * pi * sigma2) * s;
}

HPReal mean_bias(const HPReal& mu, const HPReal& sigma2) {
  require_positive(sigma2);
  HPReal result;
  {
    ScopedPrecision guard(resolving_digits(sigma2));
    HPReal m(mu, precision());
    HPReal s2(sigma2, precision());
    auto sums = lattice_moment_sums(m, s2, 1, m);
    result = sums[1] / sums[0];
  }
  return round_to_working(result);
}

DiscreteGaussian::DiscreteGaussian(const HPReal& sigma2, const HPReal& mu) : sigma2_(sigma2), mu_(mu) {
  require_positive(sigma2);
  norm_ = dpacct::normalizer(mu_, sigma2_);
  HPReal radius = 16 * sqrt(sigma2_);
  lo_ = to_i64(ceil(mu_ - radius));
  hi_ = to_i64(floor(mu_ + radius));
}

HPReal DiscreteGaussian::pmf(std::int64_t x) const {
  HPReal y = HPReal(x) - mu_;
  return exp(-y * y / (2 * sigma2_)) / norm_;
}

HPReal DiscreteGaussian::right_sum(std::int64_t from) const {
  const HPReal tol = series_tolerance();
  HPReal s = 0;
  for (std::int64_t x = from;; ++x) {
    HPReal y = HPReal(x) - mu_;
    HPReal w = exp(-y * y / (2 * sigma2_));
    s += w;
    if (y > 0 && w <= tol * s) break;
    if (x - from > kWalkCap) throw DomainError("tail sum did not converge");
  }
  return s;
}

HPReal DiscreteGaussian::left_sum(std::int64_t upto) const {
  const HPReal tol = series_tolerance();
  HPReal s = 0;
  for (std::int64_t x = upto;; --x) {
    HPReal y = HPReal(x) - mu_;
    HPReal w = exp(-y * y / (2 * sigma2_));
    s += w;
    if (y < 0 && w <= tol * s) break;
    if (upto - x > kWalkCap) throw DomainError("tail sum did not converge");
  }
  return s;
}

HPReal DiscreteGaussian::tail_prob(const HPReal& t) const {
  std::int64_t from = to_i64(floor(t)) + 1;
  if (HPReal(from) > mu_) return right_sum(from) / norm_;
  return 1 - left_sum(from - 1) / norm_;
}

HPReal DiscreteGaussian::cdf(const HPReal& t) const {
  std::int64_t upto = to_i64(floor(t));
  if (HPReal(upto + 1) > mu_) return 1 - right_sum(upto + 1) / norm_;
  return left_sum(upto) / norm_;
}

std::vector<HPReal> DiscreteGaussian::truncated_pmf() const {
  std::vector<HPReal> out;
  out.reserve(static_cast<std::size_t>(hi_ - lo_ + 1));
  for (std::int64_t x = lo_; x <= hi_; ++x) out.push_back(pmf(x));
  return out;
}

void DiscreteGaussian::require_centered(const char* what) const {
  if (mu_ != 0) throw DomainError(std::string(what) + " requires mu = 0");
}

HPReal DiscreteGaussian::variance_deficit() const {
  require_centered("variance");
  unsigned digits = resolving_digits(sigma2_);
  if (digits >= kMaxResolvingDigits) return variance_deficit_closed_form();
  HPReal gap;
  {
    ScopedPrecision guard(digits);
    HPReal s2(sigma2_, precision());
    auto sums = lattice_moment_sums(HPReal(0), s2, 2, HPReal(0));
    gap = s2 - sums[2] / sums[0];
  }
  return round_to_working(gap);
}

HPReal DiscreteGaussian::variance() const { return sigma2_ - variance_deficit(); }

HPReal DiscreteGaussian::cumulant(int order) const {
  require_centered("cumulants");
  if (order < 1 || order > 6) throw DomainError("cumulant order must be in 1..6");
  if (order % 2 == 1) return HPReal(0);
  if (order == 2) return variance();
  unsigned digits = resolving_digits(sigma2_);
  if (digits >= kMaxResolvingDigits) return cumulant_closed_form(order);
  HPReal k;
  {
    ScopedPrecision guard(digits);
    HPReal s2(sigma2_, precision());
    auto sums = lattice_moment_sums(HPReal(0), s2, 6, HPReal(0));
    HPReal m2 = sums[2] / sums[0];
    HPReal m4 = sums[4] / sums[0];
    HPReal m6 = sums[6] / sums[0];
    if (order == 4)
      k = m4 - 3 * m2 * m2;
    else
      k = m6 - 15 * m4 * m2 + 30 * m2 * m2 * m2;
  }
  return round_to_working(k);
}

namespace {

// a_r = c^{(r)}(0)/c(0) for c(s) = 1 + 2 sum_k q^{k^2} cos(2 pi sigma2 k s).
struct ThetaDerivs {
  HPReal a2, a4, a6;
};

ThetaDerivs theta_derivs(const HPReal& sigma2) {
  const HPReal tol = series_tolerance();
  HPReal pi = hp_pi();
  HPReal lam = 2 * pi * pi * sigma2;
  HPReal om = 2 * pi * sigma2;
  HPReal c0 = 1, c2 = 0, c4 = 0, c6 = 0;
  for (long k = 1;; ++k) {
    HPReal g = 2 * exp(-lam * k * k);
    HPReal wk = om * k;
    HPReal w2 = wk * wk;
    c0 += g;
    c2 += g * w2;
    c4 += g * w2 * w2;
    c6 += g * w2 * w2 * w2;
    if (g * w2 * w2 * w2 < tol * c6 && k > 1) break;
    if (k > 100000) throw DomainError("theta derivative series did not converge");
  }
  return ThetaDerivs{-c2 / c0, c4 / c0, -c6 / c0};
}

}  // namespace

HPReal DiscreteGaussian::variance_deficit_closed_form() const {
  require_centered("variance");
  return -theta_derivs(sigma2_).a2;
}

HPReal DiscreteGaussian::cumulant_closed_form(int order) const {
  require_centered("cumulants");
  if (order < 1 || order > 6) throw DomainError("cumulant order must be in 1..6");
  if (order % 2 == 1) return HPReal(0);
  auto d = theta_derivs(sigma2_);
  if (order == 2) return sigma2_ + d.a2;
  if (order == 4) return d.a4 - 3 * d.a2 * d.a2;
  return d.a6 - 15 * d.a4 * d.a2 + 30 * d.a2 * d.a2 * d.a2;
}

DiscreteGaussianSampler::DiscreteGaussianSampler(const DiscreteGaussian& dist, std::uint64_t seed)
    : lo_(dist.support_lo()), rng_(seed) {
  auto p = dist.truncated_pmf();
  cum_.resize(p.size());
  cum_d_.resize(p.size());
  HPReal acc = dist.cdf(HPReal(lo_)) - p[0];  // left tail folded into the first cell
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    cum_[i] = acc;
  }
  cum_.back() = 1;  // right tail folded into the last cell
  for (std::size_t i = 0; i < p.size(); ++i) cum_d_[i] = cum_[i].convert_to<double>();
  unsigned bits = boost::multiprecision::detail::digits10_2_2(precision());
  words_ = std::min(16, static_cast<int>(bits / 64 + 2));
}

std::int64_t DiscreteGaussianSampler::operator()() {
  // u uniform on [0,1) with more bits than the working precision.
  std::uint64_t words[16];
  for (int i = 0; i < words_; ++i) words[i] = rng_();
  const double ud = std::ldexp(static_cast<double>(words[0] >> 11), -53);
  std::size_t idx = static_cast<std::size_t>(std::upper_bound(cum_d_.begin(), cum_d_.end(), ud) - cum_d_.begin());
  if (idx >= cum_.size()) idx = cum_.size() - 1;
  // The double decision is exact unless u sits within rounding of a cell edge.
  const double guard = 1e-12;
  bool near = (idx > 0 && ud - cum_d_[idx - 1] < guard) || (cum_d_[idx] - ud < guard);
  if (!near) return lo_ + static_cast<std::int64_t>(idx);
  HPReal u = 0;
  const HPReal two64 = ldexp(HPReal(1), 64);
  for (int i = words_ - 1; i >= 0; --i) u = (u + HPReal(words[i])) / two64;
  // Exact correction: smallest idx with u < cum[idx].
  while (idx > 0 && u < cum_[idx - 1]) --idx;
  while (idx + 1 < cum_.size() && !(u < cum_[idx])) ++idx;
  return lo_ + static_cast<std::int64_t>(idx);
}

}  // namespace dpacct
