#pragma once

#include "dpacct/hp_numeric.h"
#include "dpacct/ledger.h"

#include <optional>

namespace dpacct {

struct IidCompositionSpec {
  long n = 1;
  HPReal sigma2;
  long mu = 1;

  HPReal B() const { return sqrt(HPReal(n) * sigma2); }
  void validate() const;
};

// f_{S_n}(t) = e^{-t^2/2} * ratio(sigma pi t / sqrt n)^n with S_n = sum X_i / B_n.
HPReal char_fn(const IidCompositionSpec& spec, const HPReal& t);

// Certified sup over the lattice of |P[S_n = y] - phi(y)/B_n|.
struct ResidualBound {
  long n = 0;
  HPReal sigma2;
  HPReal r;
  HPReal omega1;
  HPReal omega2;
  HPReal omega3;
  bool small_sigma = false;  // sigma2 < 1: bound is loose
};
ResidualBound residual_bound(long n, const HPReal& sigma2);

struct IidDelta {
  HPReal delta;  // main1 - e^eps main2, clamped to [0,1]
  ErrorLedger ledger;
  HPReal upper() const { return delta + ledger.total(); }
  bool flagged = false;  // ledger total above the requested tolerance
};

// Evaluates the approximate profile; the residual is computed once per instance.
class IidAccountant {
 public:
  explicit IidAccountant(const IidCompositionSpec& spec);

  const IidCompositionSpec& spec() const { return spec_; }
  const ResidualBound& residual() const { return residual_; }

  IidDelta delta_eps(const HPReal& eps, const std::optional<HPReal>& tolerance = std::nullopt) const;

 private:
  struct MainSum {
    HPReal value;
    HPReal count;
    HPReal cap;  // U
  };
  MainSum main_sum(const HPReal& threshold) const;

  IidCompositionSpec spec_;
  ResidualBound residual_;
};

IidDelta delta_eps(const IidCompositionSpec& spec, const HPReal& eps,
                   const std::optional<HPReal>& tolerance = std::nullopt);

struct EpsSearchResult {
  HPReal eps;
  IidDelta at;
  bool flagged = false;  // target not bracketed (delta(0) below target)
  int iterations = 0;
};

// Smallest eps (to the search tolerance) whose certified upper bound
// delta + ledger total is <= delta_target.
EpsSearchResult eps_from_delta(const IidCompositionSpec& spec, const HPReal& delta_target);

struct SigmaSearchResult {
  HPReal sigma2;
  IidDelta at;
  int iterations = 0;
};

// Smallest sigma2 (relative tolerance 1e-7) with certified delta(eps) <= delta.
SigmaSearchResult sigma_from_budget(long n, const HPReal& eps, const HPReal& delta, long mu = 1);

}  // namespace dpacct
