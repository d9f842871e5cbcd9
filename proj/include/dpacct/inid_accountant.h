#pragma once

#include "dpacct/hp_numeric.h"
#include "dpacct/iid_accountant.h"
#include "dpacct/ledger.h"

#include <string>
#include <vector>

namespace dpacct {

struct AllocationGroup {
  std::string name;
  HPReal a;      // fraction of the total zCDP budget
  long n_folds;  // i.i.d. releases in this group
  std::vector<std::string> levels;  // reporting names sharing this row
};

struct AllocationConfig {
  HPReal rho;
  std::vector<AllocationGroup> groups;
  long L = 1000;     // lattice scale; every a_i L must be an integer
  long n_ref = 10;   // per-level query count in sigma_i^2 = n_ref / (2 a_i rho)

  HPReal n_eff() const;  // sum a_i n_i
  // Structural checks: a_i in (0,1), a_i L integral, n_i >= 1, rho > 0.
  void validate() const;
  // Additionally requires sum a_i n_i = n_ref within 1e-12.
  void validate_thresholds() const;
  long scaled_a(std::size_t i) const;  // a_i L
};

std::vector<HPReal> sigmas_from_allocation(const AllocationConfig& config);

struct Thresholds {
  HPReal t_eps;  // (n/2)(eps/rho - 1)
  HPReal T_eps;  // (n/2)(eps/rho + 1)
};
Thresholds thresholds(const AllocationConfig& config, const HPReal& eps);

struct TruncationErrors {
  HPReal e00;  // sum over groups of the two-sided sub-Gaussian tail, 2 k e^{-72}
  HPReal e01;  // nu-mass outside the 12 sigma box
  HPReal e02;  // lattice-box count times the telescoped residual products
  HPReal total() const { return e00 + e01 + e02; }
};

// Summation window for one threshold: m runs over [A, B] with A = floor(tau L) + 1.
struct KernelWindow {
  HPReal tau;
  HPReal cap;  // B = ceil(cap L); cap = 6 tau for tau > 0
  long long A = 0;
  long long B = 0;
  HPReal count() const { return HPReal(B - A + 1); }
};

struct SieveResult {
  HPReal sup;       // certified sup of |prod f_i| on [b, pi]
  HPReal at;        // left end of the maximizing cell
  long long cells = 0;
  bool certified = true;  // sup below the 1e-35 design threshold
};

struct MomentBounds {
  // abs_moment[p] >= integral |Y|^p d nu for Y = sum a_i L Xbar_i, p = 0..6
  std::vector<HPReal> abs_moment;
};

struct OverallResult {
  HPReal eps;
  HPReal P_t;  // quadrature estimate of nu(Y > t_eps L)
  HPReal P_T;
  HPReal delta_upper;
  HPReal delta_two_sided;
  HPReal first_term_error;
  ErrorLedger ledger;  // two-sided total
  HPReal M6_t;
  HPReal M6_T;
  bool flagged = false;  // E3 above 1e-12 or uncertified sieve
};

// Heterogeneous accountant for one allocation; all group data precomputed.
class InidAccountant {
 public:
  explicit InidAccountant(const AllocationConfig& config);

  const AllocationConfig& config() const { return config_; }
  std::size_t k() const { return groups_.size(); }
  const std::vector<HPReal>& sigma2() const { return sigma2_; }
  const std::vector<HPReal>& variance() const { return v_; }  // v_i = n_i sigma_i^2
  const std::vector<HPReal>& residuals() const { return r_; }
  const std::vector<HPReal>& masses() const { return mass_; }

  // f_i(s) = sum_x nu_i(x) cos(s x), by its Poisson dual sum_k e^{-v (s - 2 pi k)^2 / 2}.
  HPReal group_cf(std::size_t i, const HPReal& s) const;
  HPReal product_cf(const HPReal& t) const;  // prod_i f_i(a_i L t)

  // nu_i(Xbar_i > x) and sum_x |x|^p nu_i(x).
  HPReal group_tail(std::size_t i, const HPReal& x) const;
  HPReal group_abs_moment(std::size_t i, int p) const;

  TruncationErrors truncation_errors() const;
  KernelWindow window(const HPReal& tau) const;
  HPReal integrand_F(const KernelWindow& w, const HPReal& t) const;
  HPReal tail_error(const KernelWindow& w) const;  // E1
  SieveResult sieve(const HPReal& b) const;
  HPReal domain_error(const KernelWindow& w, const SieveResult& s, const HPReal& b) const;  // E2
  const MomentBounds& moment_bounds() const { return moments_; }
  HPReal sixth_derivative_bound(const KernelWindow& w) const;  // M6

  OverallResult overall_delta(const HPReal& eps, const BooleQuadratureSpec& quad, unsigned threads = 1) const;

 private:
  AllocationConfig config_;
  std::vector<AllocationGroup> groups_;
  std::vector<HPReal> sigma2_, v_, r_, mass_;
  std::vector<long> c_;  // a_i L
  MomentBounds moments_;
};

// Convenience wrappers.
TruncationErrors truncation_errors(const AllocationConfig& config);
HPReal sieve_domain_bound(const AllocationConfig& config, const HPReal& eps, const HPReal& b = HPReal("0.01"));
HPReal sixth_derivative_bound(const AllocationConfig& config, const HPReal& eps);
OverallResult overall_delta(const AllocationConfig& config, const HPReal& eps, const BooleQuadratureSpec& quad,
                            unsigned threads = 1);

BooleQuadratureSpec default_overall_quadrature(std::int64_t N = 400001);

struct OverallEpsResult {
  HPReal eps;
  OverallResult at;
  int evaluations = 0;
};
// Smallest eps (tolerance eps_tol) with certified delta_upper <= delta_target.
OverallEpsResult overall_eps(const AllocationConfig& config, const HPReal& delta_target,
                             const BooleQuadratureSpec& quad, unsigned threads = 1,
                             const HPReal& eps_tol = HPReal("1e-3"));

struct ScaleSearchResult {
  HPReal m;  // common multiplier on all sigma_i^2
  HPReal reduction() const { return 1 - m; }
  OverallResult at;
  int evaluations = 0;
  bool flagged = false;  // m = 1 already violates the target
};
// Smallest m in (0,1] with certified delta_upper(eps_target) <= delta_target.
ScaleSearchResult uniform_scale_search(const AllocationConfig& config, const HPReal& eps_target,
                                       const HPReal& delta_target, const BooleQuadratureSpec& quad,
                                       unsigned threads = 1, const HPReal& m_tol = HPReal("1e-4"));

// Scaling every sigma_i^2 by m is the same as dividing rho by m.
AllocationConfig scaled_config(const AllocationConfig& config, const HPReal& m);

}  // namespace dpacct
