#include "dpacct/inid_accountant.h"

#include "dpacct/zcdp.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace dpacct {

namespace {

// Grid refinement per half period of each group characteristic function.
constexpr long kSieveSteps = 200;
// Below this sup the domain truncation is considered certified.
const char* const kSieveThreshold = "1e-35";
// Quadrature error above this flags the result.
const char* const kE3Flag = "1e-12";
const char* const kEepsLabel = "exp(eps)";

long long floor_ll(const HPReal& v) { return floor(v).convert_to<long long>(); }
long long ceil_ll(const HPReal& v) { return ceil(v).convert_to<long long>(); }

HPReal binomial6(int j) {
  static const int c[7] = {1, 6, 15, 20, 15, 6, 1};
  return HPReal(c[j]);
}

}  // namespace

HPReal AllocationConfig::n_eff() const {
  HPReal s = 0;
  for (const auto& g : groups) s += g.a * g.n_folds;
  return s;
}

long AllocationConfig::scaled_a(std::size_t i) const {
  return round(groups.at(i).a * L).convert_to<long>();
}

void AllocationConfig::validate() const {
  if (!(rho > 0)) throw SpecError("allocation: rho must be positive");
  if (groups.empty()) throw SpecError("allocation: no groups");
  if (L < 1) throw SpecError("allocation: lattice scale must be positive");
  if (n_ref < 1) throw SpecError("allocation: n_ref must be positive");
  const HPReal tol("1e-12");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    if (!(g.a > 0) || !(g.a < 1)) throw SpecError("allocation: group " + g.name + " needs a in (0,1)");
    if (g.n_folds < 1) throw SpecError("allocation: group " + g.name + " needs n >= 1");
    HPReal aL = g.a * L;
    if (abs(aL - round(aL)) > tol) throw SpecError("allocation: group " + g.name + " has a*L not an integer");
  }
  if (!(n_eff() > 0)) throw SpecError("allocation: sum a_i n_i must be positive");
}

void AllocationConfig::validate_thresholds() const {
  validate();
  if (abs(n_eff() - n_ref) > HPReal("1e-12"))
    throw SpecError("allocation: sum a_i n_i = " + n_eff().str(15) + " differs from n = " + std::to_string(n_ref));
}

std::vector<HPReal> sigmas_from_allocation(const AllocationConfig& config) {
  config.validate();
  std::vector<HPReal> out;
  for (const auto& g : config.groups) out.push_back(HPReal(config.n_ref) / (2 * g.a * config.rho));
  return out;
}

Thresholds thresholds(const AllocationConfig& config, const HPReal& eps) {
  config.validate_thresholds();
  HPReal half = HPReal(config.n_ref) / 2;
  return Thresholds{half * (eps / config.rho - 1), half * (eps / config.rho + 1)};
}

InidAccountant::InidAccountant(const AllocationConfig& config) : config_(config), groups_(config.groups) {
  sigma2_ = sigmas_from_allocation(config_);
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    v_.push_back(groups_[i].n_folds * sigma2_[i]);
    c_.push_back(config_.scaled_a(i));
    r_.push_back(residual_bound(groups_[i].n_folds, sigma2_[i]).r);
  }
  for (std::size_t i = 0; i < groups_.size(); ++i) mass_.push_back(group_cf(i, HPReal(0)));

  // Minkowski: ||sum Z_i||_p <= sum ||Z_i||_p under the product measure nu.
  moments_.abs_moment.assign(7, HPReal(0));
  HPReal total_mass = 1;
  for (const auto& m : mass_) total_mass *= m;
  moments_.abs_moment[0] = total_mass;
  for (int p = 1; p <= 6; ++p) {
    HPReal norm_sum = 0;
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      HPReal others = total_mass / mass_[i];
      HPReal integral = group_abs_moment(i, p) * others;
      norm_sum += HPReal(c_[i]) * pow(integral, HPReal(1) / p);
    }
    moments_.abs_moment[p] = pow(norm_sum, p);
  }
}

HPReal InidAccountant::group_cf(std::size_t i, const HPReal& s) const {
  const HPReal twopi = 2 * hp_pi();
  const HPReal& v = v_[i];
  HPReal k0 = round(s / twopi);
  HPReal d0 = s - twopi * k0;
  HPReal lead = -v * d0 * d0 / 2;
  HPReal sum = exp(lead);
  // Further terms decay monotonically on each side; skip those below the
  // working-precision cutoff relative to the leading term.
  const double cut = lead.convert_to<double>() - (precision() + 10) * std::log(10.0);
  const double vd = v.convert_to<double>();
  const double dd = d0.convert_to<double>();
  const double tp = twopi.convert_to<double>();
  for (long j = 1;; ++j) {
    bool any = false;
    for (int side : {-1, 1}) {
      double e = -vd * (dd + side * tp * j) * (dd + side * tp * j) / 2;
      if (e < cut) continue;
      any = true;
      HPReal d = d0 + side * twopi * j;
      sum += exp(-v * d * d / 2);
    }
    if (!any) break;
  }
  return sum;
}

HPReal InidAccountant::product_cf(const HPReal& t) const {
  HPReal p = 1;
  for (std::size_t i = 0; i < groups_.size(); ++i) p *= group_cf(i, HPReal(c_[i]) * t);
  return p;
}

namespace {

// sum_{y >= y0} e^{-y^2/(2v)} for y0 >= 1, by the ratio recurrence.
HPReal right_gauss_sum(long long y0, const HPReal& v) {
  const HPReal tol = series_tolerance();
  HPReal y(y0);
  HPReal w = exp(-y * y / (2 * v));
  HPReal r = exp(-(2 * y + 1) / (2 * v));
  const HPReal d = exp(-1 / v);
  HPReal s = 0;
  for (long long steps = 0;; ++steps) {
    s += w;
    if (w <= tol * s) break;
    w *= r;
    r *= d;
    if (steps > 100'000'000) throw DomainError("lattice tail did not converge");
  }
  return s;
}

}  // namespace

HPReal InidAccountant::group_tail(std::size_t i, const HPReal& x) const {
  const HPReal& v = v_[i];
  const HPReal norm = sqrt(2 * hp_pi() * v);
  long long y0 = floor_ll(x) + 1;
  if (y0 >= 1) return right_gauss_sum(y0, v) / norm;
  // sum_{y >= y0} = mass - sum_{y <= y0 - 1} = mass - sum_{y >= 1 - y0}
  return mass_[i] - right_gauss_sum(1 - y0, v) / norm;
}

HPReal InidAccountant::group_abs_moment(std::size_t i, int p) const {
  if (p == 0) return mass_[i];
  const HPReal& v = v_[i];
  const HPReal tol = series_tolerance();
  const HPReal reach = sqrt(HPReal(p) * v) + 2;
  HPReal s = 0;
  HPReal w = exp(-1 / (2 * v));
  HPReal r = exp(-3 / (2 * v));
  const HPReal d = exp(-1 / v);
  for (long long y = 1;; ++y) {
    HPReal term = w * pow(HPReal(y), p);
    s += term;
    if (HPReal(y) > reach && term <= tol * s) break;
    w *= r;
    r *= d;
  }
  return 2 * s / sqrt(2 * hp_pi() * v);
}

TruncationErrors InidAccountant::truncation_errors() const {
  TruncationErrors t;
  const std::size_t k = groups_.size();
  t.e00 = 2 * HPReal(static_cast<long>(k)) * exp(HPReal(-72));

  HPReal total_mass = 1;
  for (const auto& m : mass_) total_mass *= m;
  t.e01 = 0;
  HPReal box = 1;
  for (std::size_t i = 0; i < k; ++i) {
    HPReal edge = 12 * sqrt(v_[i]);
    t.e01 += 2 * group_tail(i, edge) * (total_mass / mass_[i]);
    box *= HPReal(2 * floor_ll(edge) + 1);
  }
  // |prod c_i - prod b_i| <= sum_i |c_i - b_i| prod_{j<i} |c_j| prod_{j>i} b_j
  HPReal tele = 0;
  for (std::size_t i = 0; i < k; ++i) {
    HPReal cap = 1;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      HPReal b = 1 / sqrt(2 * hp_pi() * v_[j]);
      cap *= (j < i) ? b + r_[j] : b;
    }
    tele += r_[i] * cap;
  }
  t.e02 = box * tele;
  return t;
}

KernelWindow InidAccountant::window(const HPReal& tau) const {
  KernelWindow w;
  w.tau = tau;
  if (tau > 0) {
    w.cap = 6 * tau;
  } else {
    // Thresholds at or below zero: cap far enough out that the tail is negligible.
    HPReal widest = 0;
    for (std::size_t i = 0; i < groups_.size(); ++i) widest = std::max(widest, groups_[i].a * sqrt(v_[i]));
    w.cap = abs(tau) + 12 * HPReal(static_cast<long>(groups_.size())) * widest;
  }
  w.A = floor_ll(tau * config_.L) + 1;
  w.B = std::max(w.A, ceil_ll(w.cap * config_.L));
  return w;
}

HPReal InidAccountant::integrand_F(const KernelWindow& w, const HPReal& t) const {
  HPReal pf = product_cf(t);
  if (t == 0) return w.count() / hp_pi() * pf;
  HPReal kernel = (sin((HPReal(w.B) + HPReal(0.5)) * t) - sin((HPReal(w.A) - HPReal(0.5)) * t)) / (2 * sin(t / 2));
  return kernel / hp_pi() * pf;
}

HPReal InidAccountant::tail_error(const KernelWindow& w) const {
  HPReal total_mass = 1;
  for (const auto& m : mass_) total_mass *= m;
  HPReal k(static_cast<long>(groups_.size()));
  HPReal e1 = 0;
  for (std::size_t i = 0; i < groups_.size(); ++i)
    e1 += group_tail(i, w.cap / (k * groups_[i].a)) * (total_mass / mass_[i]);
  return e1;
}

SieveResult InidAccountant::sieve(const HPReal& b) const {
  const HPReal pi = hp_pi();
  SieveResult res;
  res.sup = 0;
  res.at = b;
  const std::size_t k = groups_.size();
  const long full = 2 * kSieveSteps;  // grid points per period

  // cellmax[i][J mod full] = max of f_i over s in [J pi/200, (J+1) pi/200]
  std::vector<std::vector<HPReal>> cellmax(k, std::vector<HPReal>(full));
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<HPReal> fv(kSieveSteps + 1);
    for (long j = 0; j <= kSieveSteps; ++j) fv[j] = group_cf(i, pi * j / kSieveSteps);
    auto at = [&](long j) {
      j %= full;
      return fv[j <= kSieveSteps ? j : full - j];
    };
    for (long J = 0; J < full; ++J) cellmax[i][J] = std::max(at(J), at(J + 1));
  }

  // Grid points u = j pi / (200 c_i), stored as (j, c_i), within (b, pi].
  struct Pt {
    long long j;
    long c;
  };
  std::vector<Pt> pts;
  std::vector<long long> first_cell(k);
  for (std::size_t i = 0; i < k; ++i) {
    long long scale = kSieveSteps * c_[i];
    long long jb = floor_ll(b * scale / pi);
    first_cell[i] = jb;
    for (long long j = jb + 1; j <= scale; ++j) pts.push_back(Pt{j, c_[i]});
  }
  std::sort(pts.begin(), pts.end(), [](const Pt& x, const Pt& y) { return x.j * y.c < y.j * x.c; });

  auto cell_product = [&](auto cell_index) {
    HPReal p = 1;
    for (std::size_t i = 0; i < k; ++i) p *= cellmax[i][static_cast<std::size_t>(cell_index(i) % full)];
    return p;
  };

  // First cell starts at b; later cells start at the previous grid point.
  HPReal p0 = cell_product([&](std::size_t i) { return first_cell[i]; });
  res.sup = p0;
  res.cells = 1;
  for (std::size_t n = 0; n + 1 < pts.size(); ++n) {
    const Pt& lo = pts[n];
    if (lo.j * pts[n + 1].c == pts[n + 1].j * lo.c) continue;  // duplicate point
    HPReal p = cell_product([&](std::size_t i) { return lo.j * c_[i] / lo.c; });
    ++res.cells;
    if (p > res.sup) {
      res.sup = p;
      res.at = pi * HPReal(lo.j) / HPReal(kSieveSteps * lo.c);
    }
  }
  res.certified = res.sup < HPReal(kSieveThreshold);
  return res;
}

HPReal InidAccountant::domain_error(const KernelWindow& w, const SieveResult& s, const HPReal& b) const {
  const HPReal pi = hp_pi();
  if (b >= pi) return HPReal(0);
  return (pi - b) / pi * w.count() * s.sup;
}

HPReal InidAccountant::sixth_derivative_bound(const KernelWindow& w) const {
  // S_q = sum_{m=A}^{B} |m|^q
  std::vector<HPReal> S(7, HPReal(0));
  for (long long m = w.A; m <= w.B; ++m) {
    HPReal am(m < 0 ? -m : m);
    HPReal pw = 1;
    for (int q = 0; q <= 6; ++q) {
      S[q] += pw;
      pw *= am;
    }
  }
  HPReal total = 0;
  for (int j = 0; j <= 6; ++j) total += binomial6(j) * S[6 - j] * moments_.abs_moment[j];
  return total / hp_pi();
}

OverallResult InidAccountant::overall_delta(const HPReal& eps, const BooleQuadratureSpec& quad,
                                            unsigned threads) const {
  quad.validate();
  if (quad.a != 0) throw SpecError("overall_delta: quadrature must start at 0");
  const HPReal pi = hp_pi();
  if (quad.b > pi) throw SpecError("overall_delta: quadrature must end at or before pi");
  Thresholds th = thresholds(config_, eps);
  KernelWindow wt = window(th.t_eps);
  KernelWindow wT = window(th.T_eps);

  const HPReal At = HPReal(wt.A) - HPReal(0.5), Bt = HPReal(wt.B) + HPReal(0.5);
  const HPReal AT = HPReal(wT.A) - HPReal(0.5), BT = HPReal(wT.B) + HPReal(0.5);
  const HPReal ct = wt.count(), cT = wT.count();
  VectorFn f = [&](const HPReal& t, std::vector<HPReal>& out) {
    HPReal pf = product_cf(t) / pi;
    if (t == 0) {
      out[0] = ct * pf;
      out[1] = cT * pf;
      return;
    }
    HPReal den = 2 * sin(t / 2);
    out[0] = (sin(Bt * t) - sin(At * t)) / den * pf;
    out[1] = (sin(BT * t) - sin(AT * t)) / den * pf;
  };
  auto sums = boole_sum_many(f, 2, quad, threads);

  OverallResult res;
  res.eps = eps;
  res.P_t = sums[0];
  res.P_T = sums[1];

  TruncationErrors tr = truncation_errors();
  SieveResult sv;
  bool truncated = quad.b < pi;
  if (truncated) sv = sieve(quad.b);
  HPReal e1t = tail_error(wt), e1T = tail_error(wT);
  HPReal e2t = truncated ? domain_error(wt, sv, quad.b) : HPReal(0);
  HPReal e2T = truncated ? domain_error(wT, sv, quad.b) : HPReal(0);
  res.M6_t = sixth_derivative_bound(wt);
  res.M6_T = sixth_derivative_bound(wT);
  HPReal e3t = boole_error_bound(quad, res.M6_t);
  HPReal e3T = boole_error_bound(quad, res.M6_T);

  HPReal ee = exp(eps);
  auto& L = res.ledger;
  L.add("E0_0[t]", tr.e00);
  L.add("E0_1[t]", tr.e01);
  L.add("E0_2[t]", tr.e02);
  L.add("E1[t]", e1t);
  L.add("E2[t]", e2t);
  L.add("E3[t]", e3t);
  L.add_weighted("E0_0[T]", tr.e00, ee, kEepsLabel);
  L.add_weighted("E0_1[T]", tr.e01, ee, kEepsLabel);
  L.add_weighted("E0_2[T]", tr.e02, ee, kEepsLabel);
  L.add_weighted("E1[T]", e1T, ee, kEepsLabel);
  L.add_weighted("E2[T]", e2T, ee, kEepsLabel);
  L.add_weighted("E3[T]", e3T, ee, kEepsLabel);

  res.first_term_error = tr.total() + e1t + e2t + e3t;
  HPReal two = res.P_t - ee * res.P_T;
  res.delta_two_sided = two < 0 ? HPReal(0) : (two > 1 ? HPReal(1) : two);
  HPReal up = res.P_t + res.first_term_error;
  if (up > 1) up = 1;
  if (up < res.delta_two_sided) up = res.delta_two_sided;
  res.delta_upper = up;
  res.flagged = e3t > HPReal(kE3Flag) || (truncated && !sv.certified);
  return res;
}

TruncationErrors truncation_errors(const AllocationConfig& config) {
  return InidAccountant(config).truncation_errors();
}

HPReal sieve_domain_bound(const AllocationConfig& config, const HPReal& eps, const HPReal& b) {
  InidAccountant acct(config);
  auto sv = acct.sieve(b);
  return acct.domain_error(acct.window(thresholds(config, eps).t_eps), sv, b);
}

HPReal sixth_derivative_bound(const AllocationConfig& config, const HPReal& eps) {
  InidAccountant acct(config);
  return acct.sixth_derivative_bound(acct.window(thresholds(config, eps).t_eps));
}

OverallResult overall_delta(const AllocationConfig& config, const HPReal& eps, const BooleQuadratureSpec& quad,
                            unsigned threads) {
  return InidAccountant(config).overall_delta(eps, quad, threads);
}

BooleQuadratureSpec default_overall_quadrature(std::int64_t N) {
  return BooleQuadratureSpec{HPReal(0), HPReal(1) / 100, N};
}

AllocationConfig scaled_config(const AllocationConfig& config, const HPReal& m) {
  if (!(m > 0)) throw DomainError("scale multiplier must be positive");
  AllocationConfig out = config;
  out.rho = config.rho / m;
  return out;
}

namespace {

// Illinois false position on g with g(bad) > 0 >= g(good); returns the final
// good point. g is evaluated on log(delta) so it is close to linear.
template <class Eval>
HPReal illinois(HPReal bad, HPReal g_bad, HPReal good, HPReal g_good, const HPReal& x_tol, const Eval& g,
                int& evaluations) {
  int side = 0;
  const HPReal g_tol("1e-6");
  while (abs(good - bad) > x_tol && abs(g_good) > g_tol) {
    HPReal x = good - g_good * (good - bad) / (g_good - g_bad);
    HPReal span = good - bad;
    // keep the probe strictly inside the bracket
    HPReal lo_edge = bad + span / 1000, hi_edge = good - span / 1000;
    if ((x - lo_edge) * (x - hi_edge) > 0) x = (good + bad) / 2;
    HPReal gx = g(x);
    ++evaluations;
    if (gx <= 0) {
      good = x;
      g_good = gx;
      if (side == -1) g_bad /= 2;
      side = -1;
    } else {
      bad = x;
      g_bad = gx;
      if (side == 1) g_good /= 2;
      side = 1;
    }
    if (evaluations > 60) break;
  }
  return good;
}

}  // namespace

OverallEpsResult overall_eps(const AllocationConfig& config, const HPReal& delta_target,
                             const BooleQuadratureSpec& quad, unsigned threads, const HPReal& eps_tol) {
  if (!(delta_target > 0) || !(delta_target < 1)) throw DomainError("overall_eps: delta must lie in (0,1)");
  InidAccountant acct(config);
  OverallEpsResult res;
  const HPReal log_target = log(delta_target);
  std::vector<OverallResult> seen;
  auto g = [&](const HPReal& eps) {
    OverallResult r = acct.overall_delta(eps, quad, threads);
    seen.push_back(r);
    return log(r.delta_upper) - log_target;
  };
  HPReal good = eps_from_rho(config.rho, delta_target);
  HPReal g_good = g(good);
  ++res.evaluations;
  while (g_good > 0) {
    good *= HPReal("1.1");
    g_good = g(good);
    if (++res.evaluations > 40) throw DomainError("overall_eps: no bracket");
  }
  HPReal bad = good * HPReal("0.9");
  HPReal g_bad = g(bad);
  ++res.evaluations;
  while (g_bad <= 0) {
    good = bad;
    g_good = g_bad;
    bad *= HPReal("0.9");
    g_bad = g(bad);
    if (++res.evaluations > 80) throw DomainError("overall_eps: no bracket");
  }
  res.eps = illinois(bad, g_bad, good, g_good, eps_tol, g, res.evaluations);
  for (const auto& r : seen)
    if (r.eps == res.eps) res.at = r;
  return res;
}

ScaleSearchResult uniform_scale_search(const AllocationConfig& config, const HPReal& eps_target,
                                       const HPReal& delta_target, const BooleQuadratureSpec& quad,
                                       unsigned threads, const HPReal& m_tol) {
  if (!(delta_target > 0) || !(delta_target < 1)) throw DomainError("uniform_scale_search: delta must lie in (0,1)");
  ScaleSearchResult res;
  const HPReal log_target = log(delta_target);
  std::vector<std::pair<HPReal, OverallResult>> seen;
  auto g = [&](const HPReal& m) {
    OverallResult r = InidAccountant(scaled_config(config, m)).overall_delta(eps_target, quad, threads);
    seen.emplace_back(m, r);
    return log(r.delta_upper) - log_target;
  };
  HPReal good = 1;
  HPReal g_good = g(good);
  ++res.evaluations;
  if (g_good > 0) {
    res.m = 1;
    res.at = seen.back().second;
    res.flagged = true;
    return res;
  }
  HPReal bad = HPReal("0.8");
  HPReal g_bad = g(bad);
  ++res.evaluations;
  while (g_bad <= 0) {
    good = bad;
    g_good = g_bad;
    bad *= HPReal("0.8");
    g_bad = g(bad);
    if (++res.evaluations > 40) throw DomainError("uniform_scale_search: no bracket");
  }
  res.m = illinois(bad, g_bad, good, g_good, m_tol, g, res.evaluations);
  for (const auto& [m, r] : seen)
    if (m == res.m) res.at = r;
  return res;
}

}  // namespace dpacct
