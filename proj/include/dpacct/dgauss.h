#pragma once

#include "dpacct/hp_numeric.h"

#include <cstdint>
#include <random>
#include <vector>

namespace dpacct {

// S(mu) = sum_{x in Z} e^{-(x-mu)^2 / (2 sigma2)}, summed directly to working precision.
HPReal normalizer(const HPReal& mu, const HPReal& sigma2);
// The same sum through its Poisson dual sqrt(2 pi sigma2) sum_k e^{-2 pi^2 sigma2 k^2} cos(2 pi k mu).
HPReal normalizer_poisson(const HPReal& mu, const HPReal& sigma2);

// E[N_Z(mu, sigma2)] - mu.
HPReal mean_bias(const HPReal& mu, const HPReal& sigma2);

// Precision (decimal digits) at which direct lattice sums resolve quantities of
// relative size e^{-2 pi^2 sigma2}; capped, see dgauss.cpp.
unsigned resolving_digits(const HPReal& sigma2);

// Discrete Gaussian N_Z(mu, sigma2). Immutable after construction.
class DiscreteGaussian {
 public:
  explicit DiscreteGaussian(const HPReal& sigma2, const HPReal& mu = HPReal(0));

  const HPReal& sigma2() const { return sigma2_; }
  const HPReal& mu() const { return mu_; }
  const HPReal& normalizer() const { return norm_; }

  HPReal pmf(std::int64_t x) const;
  HPReal tail_prob(const HPReal& t) const;  // P[X > t]
  HPReal cdf(const HPReal& t) const;        // P[X <= t]

  // Truncated support [lo, hi] with |x - mu| <= 16 sigma.
  std::int64_t support_lo() const { return lo_; }
  std::int64_t support_hi() const { return hi_; }
  std::vector<HPReal> truncated_pmf() const;

  // Requires mu = 0.
  HPReal variance() const;
  HPReal variance_deficit() const;  // sigma2 - Var, accurate in relative terms
  HPReal cumulant(int order) const;
  // Closed forms from theta derivatives; used only to cross-check cumulant().
  HPReal variance_deficit_closed_form() const;
  HPReal cumulant_closed_form(int order) const;

  HPReal mean_bias() const { return dpacct::mean_bias(mu_, sigma2_); }

 private:
  void require_centered(const char* what) const;
  HPReal left_sum(std::int64_t upto) const;   // sum_{x <= upto} w(x)
  HPReal right_sum(std::int64_t from) const;  // sum_{x >= from} w(x)

  HPReal sigma2_;
  HPReal mu_;
  HPReal norm_;
  std::int64_t lo_ = 0;
  std::int64_t hi_ = 0;
};

// Inverse-CDF sampler over the 16 sigma support; truncated mass is folded
// into the two boundary cells. One instance per thread.
class DiscreteGaussianSampler {
 public:
  DiscreteGaussianSampler(const DiscreteGaussian& dist, std::uint64_t seed);
  std::int64_t operator()();

 private:
  std::int64_t lo_;
  std::vector<HPReal> cum_;
  std::vector<double> cum_d_;
  std::mt19937_64 rng_;
  int words_;
};

}  // namespace dpacct
