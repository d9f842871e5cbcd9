#pragma once

#include "dpacct/hp_numeric.h"

#include <cstdint>
#include <vector>

namespace dpacct {

struct Knot {
  HPReal alpha;
  HPReal beta;
};

// Piecewise-linear trade-off curve stored by its knots (alpha increasing).
class TradeoffCurve {
 public:
  TradeoffCurve() = default;
  explicit TradeoffCurve(std::vector<Knot> knots);

  const std::vector<Knot>& knots() const { return knots_; }
  HPReal operator()(const HPReal& alpha) const;

  // Throws DomainError naming the first violated invariant.
  void check_invariants(const HPReal& slack = HPReal(0)) const;

 private:
  std::vector<Knot> knots_;
};

struct PrivacyPoint {
  HPReal eps;
  HPReal delta;
};

// Neyman-Pearson curve of N_Z(0,sigma2) vs N_Z(mu,sigma2), knots at integer
// thresholds over the 16 sigma support. mu = 0 yields the identity 1 - alpha.
TradeoffCurve single_tradeoff(const HPReal& sigma2, std::int64_t mu);

// P[X > eps sigma2/mu - mu/2] - e^eps P[X > eps sigma2/mu + mu/2].
HPReal single_delta(const HPReal& sigma2, std::int64_t mu, const HPReal& eps);

// Lattice constants of the 2-fold sum: c_int = sum e^{-x^2/sigma2},
// c_half = sum e^{-(x-1/2)^2/sigma2}, c_single = sum e^{-x^2/(2 sigma2)}.
struct TwofoldConstants {
  HPReal c_int;
  HPReal c_half;
  HPReal c_single;
};
TwofoldConstants twofold_constants(const HPReal& sigma2);

// Closed-form knots of the 2-fold composition, one per integer threshold.
TradeoffCurve twofold_knots(const HPReal& sigma2, std::int64_t mu);

// Exact pmf of the n-fold sum of N_Z(0,sigma2) on its truncated support.
struct LatticePmf {
  std::int64_t lo = 0;
  std::vector<HPReal> p;
  HPReal tail(const HPReal& t) const;  // P[S > t]
  HPReal at(std::int64_t s) const;
};
LatticePmf nfold_pmf(int n, const HPReal& sigma2);
LatticePmf convolve(const LatticePmf& a, const LatticePmf& b);

// Exact delta(eps) for n <= 4 i.i.d. releases by iterated convolution.
HPReal nfold_convolution_delta(int n, const HPReal& sigma2, std::int64_t mu, const HPReal& eps);

// Lower convex envelope of the pointwise minimum.
TradeoffCurve parallel_min(const std::vector<TradeoffCurve>& curves);

// delta(eps) = 1 + max_knots(-e^eps alpha - beta), clamped to [0,1].
HPReal curve_to_profile(const TradeoffCurve& curve, const HPReal& eps);
// delta = tail_up - e^eps tail_down, clamped to [0,1].
HPReal profile_from_pllr(const HPReal& tail_up, const HPReal& tail_down, const HPReal& eps);
// Trade-off curve implied by a set of (eps, delta) points, evaluated at alpha.
HPReal curve_from_profile(const std::vector<PrivacyPoint>& profile, const HPReal& alpha);

HPReal clamp01(const HPReal& v);

}  // namespace dpacct
