#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dpacct {

// Runtime-precision MPFR float. All accountant arithmetic goes through this.
// Expression templates are off so `auto` intermediates never dangle.
using HPReal = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>, boost::multiprecision::et_off>;

constexpr unsigned kDefaultDigits = 80;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Working precision in decimal digits. Set once, before any computation.
void set_precision(unsigned digits10);
unsigned precision();

// Reads ACCOUNTANT_PRECISION, falls back to the given default.
unsigned precision_from_env(unsigned fallback = kDefaultDigits);

// 10^-(D+10): relative cutoff for every truncated series.
HPReal series_tolerance();

// Temporarily raises the default precision (single-threaded use only).
class ScopedPrecision {
 public:
  explicit ScopedPrecision(unsigned digits10);
  ~ScopedPrecision();
  ScopedPrecision(const ScopedPrecision&) = delete;
  ScopedPrecision& operator=(const ScopedPrecision&) = delete;

 private:
  unsigned saved_;
};

HPReal hp_pi();
// Strict decimal parse; throws SpecError on anything else.
HPReal hp(const std::string& decimal);
HPReal hp(double v);
HPReal hp(long long v);

// Theta ratio theta3(-ix, q) / theta3(0, q) = sum_k q^{k^2} e^{2kx} / sum_k q^{k^2}.
struct ThetaValue {
  HPReal value;
  long terms = 0;  // truncation index K
};
ThetaValue theta3_ratio(const HPReal& x, const HPReal& q, const HPReal& tol);
// Same ratio parameterized by lambda = -ln q, which avoids a round trip
// through exp/log when q is astronomically small.
ThetaValue theta3_ratio_lambda(const HPReal& x, const HPReal& lambda, const HPReal& tol);
// ratio - 1 without cancellation.
ThetaValue theta3_ratio_minus_one(const HPReal& x, const HPReal& lambda, const HPReal& tol);

// (1/x) e^{-x^2/2}, an upper bound on the unnormalized Gaussian tail.
HPReal gaussian_tail_upper(const HPReal& x);

struct BooleQuadratureSpec {
  HPReal a;
  HPReal b;
  std::int64_t N = 5;

  HPReal h() const;
  void validate() const;
};

struct BooleResult {
  HPReal value;
  HPReal err;
};

using ScalarFn = std::function<HPReal(const HPReal&)>;
// Evaluates several integrands sharing one abscissa; out is pre-sized.
using VectorFn = std::function<void(const HPReal&, std::vector<HPReal>&)>;

// The point set is split into a fixed number of chunks independent of the
// thread count; chunk sums are combined in index order, so the result is
// bit-identical for any threads value.
BooleResult boole_integrate(const ScalarFn& f, const BooleQuadratureSpec& spec, const HPReal& M6,
                            unsigned threads = 1);

std::vector<HPReal> boole_sum_many(const VectorFn& f, std::size_t width,
                                   const BooleQuadratureSpec& spec, unsigned threads = 1);

HPReal boole_error_bound(const BooleQuadratureSpec& spec, const HPReal& M6);

// Scientific notation with the given significant digits.
std::string to_sci(const HPReal& v, int digits = 30);

}  // namespace dpacct
