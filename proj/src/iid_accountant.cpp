#include "dpacct/iid_accountant.h"

#include "dpacct/zcdp.h"

namespace dpacct {

namespace {

const char* const kEepsLabel = "exp(eps)";

HPReal std_normal_pdf(const HPReal& z) { return exp(-z * z / 2) / sqrt(2 * hp_pi()); }

}  // namespace

void IidCompositionSpec::validate() const {
  if (n < 1) throw DomainError("composition needs n >= 1");
  if (!(sigma2 > 0)) throw DomainError("composition needs sigma2 > 0");
  if (mu < 1) throw DomainError("composition needs mu >= 1");
}

HPReal char_fn(const IidCompositionSpec& spec, const HPReal& t) {
  spec.validate();
  HPReal pi = hp_pi();
  HPReal lambda = 2 * pi * pi * spec.sigma2;
  HPReal x = sqrt(spec.sigma2) * pi * t / sqrt(HPReal(spec.n));
  HPReal ratio = theta3_ratio_lambda(x, lambda, series_tolerance()).value;
  return exp(-t * t / 2) * pow(ratio, spec.n);
}

ResidualBound residual_bound(long n, const HPReal& sigma2) {
  IidCompositionSpec spec{n, sigma2, 1};
  spec.validate();
  const HPReal tol = series_tolerance();
  const HPReal pi = hp_pi();
  const HPReal lambda = 2 * pi * pi * sigma2;
  const HPReal scale = sqrt(sigma2) * pi / sqrt(HPReal(n));  // x = scale * t
  const HPReal P = pi * spec.B();
  const long J = floor(P).convert_to<long>();

  ResidualBound rb;
  rb.n = n;
  rb.sigma2 = sigma2;
  rb.small_sigma = sigma2 < 1;

  // On [j-1, j]: e^{-t^2/2} <= e^{-(j-1)^2/2} and the ratio is increasing, so
  // ratio(j)^n - 1 bounds the excess; ratio^n - 1 = expm1(n log1p(ratio - 1)).
  HPReal omega1 = 0;
  for (long j = 1; j <= J; ++j) {
    HPReal excess = theta3_ratio_minus_one(scale * j, lambda, tol).value;
    HPReal powm1 = expm1(HPReal(n) * log1p(excess));
    HPReal jm1(j - 1);
    omega1 += exp(-jm1 * jm1 / 2) * powm1;
  }
  rb.omega1 = omega1 / P;

  HPReal Jr(J);
  rb.omega2 = (P - Jr) / P * (char_fn(spec, Jr) + exp(-Jr * Jr / 2));
  rb.omega3 = gaussian_tail_upper(P) / P;
  rb.r = rb.omega1 + rb.omega2 + rb.omega3;
  return rb;
}

IidAccountant::IidAccountant(const IidCompositionSpec& spec)
    : spec_(spec), residual_(residual_bound(spec.n, spec.sigma2)) {}

IidAccountant::MainSum IidAccountant::main_sum(const HPReal& threshold) const {
  const HPReal B = spec_.B();
  HPReal U = threshold / B;
  if (U < 20) U = 20;
  const long long first = floor(threshold).convert_to<long long>() + 1;
  const long long last = floor(U * B).convert_to<long long>();
  MainSum out{HPReal(0), HPReal(0), U};
  if (first > last) return out;
  for (long long i = first; i <= last; ++i) out.value += std_normal_pdf(HPReal(i) / B);
  out.value /= B;
  out.count = HPReal(last - first + 1);
  return out;
}

IidDelta IidAccountant::delta_eps(const HPReal& eps, const std::optional<HPReal>& tolerance) const {
  if (eps < 0) throw DomainError("delta_eps: eps must be nonnegative");
  const HPReal m(spec_.mu);
  const HPReal c = spec_.sigma2 * eps / m;
  const HPReal shift = HPReal(spec_.n) * m / 2;
  MainSum up = main_sum(c - shift);
  MainSum down = main_sum(c + shift);
  HPReal ee = exp(eps);

  IidDelta out;
  HPReal raw = up.value - ee * down.value;
  out.delta = raw < 0 ? HPReal(0) : (raw > 1 ? HPReal(1) : raw);
  out.ledger.add("E11", up.count * residual_.r);
  out.ledger.add("E12", exp(-up.cap * up.cap / 2));
  out.ledger.add_weighted("E21", down.count * residual_.r, ee, kEepsLabel);
  out.ledger.add_weighted("E22", exp(-down.cap * down.cap / 2), ee, kEepsLabel);
  if (tolerance && out.ledger.total() > *tolerance) out.flagged = true;
  return out;
}

IidDelta delta_eps(const IidCompositionSpec& spec, const HPReal& eps, const std::optional<HPReal>& tolerance) {
  return IidAccountant(spec).delta_eps(eps, tolerance);
}

EpsSearchResult eps_from_delta(const IidCompositionSpec& spec, const HPReal& delta_target) {
  if (!(delta_target > 0) || !(delta_target < 1)) throw DomainError("eps_from_delta: delta must lie in (0,1)");
  IidAccountant acct(spec);
  EpsSearchResult res;
  IidDelta at0 = acct.delta_eps(HPReal(0));
  if (at0.upper() <= delta_target) {
    res.eps = 0;
    res.at = at0;
    res.flagged = true;
    return res;
  }
  const HPReal m(spec.mu);
  HPReal rho = HPReal(spec.n) * m * m / (2 * spec.sigma2);
  HPReal lo = 0;
  HPReal hi = 2 * eps_from_rho(rho, delta_target);
  IidDelta at_hi = acct.delta_eps(hi);
  while (at_hi.upper() > delta_target) {
    lo = hi;
    hi *= 2;
    at_hi = acct.delta_eps(hi);
    if (++res.iterations > 200) throw DomainError("eps_from_delta: no bracket");
  }
  // Stop once eps is pinned to 1e-4 and delta sits within 1e-3 of the target.
  const HPReal eps_tol("1e-4");
  const HPReal rel_tol("1e-3");
  while (true) {
    bool narrow = hi - lo < eps_tol;
    bool close = at_hi.upper() >= delta_target * (1 - rel_tol);
    if ((narrow && close) || hi - lo < HPReal("1e-30")) break;
    HPReal mid = (lo + hi) / 2;
    IidDelta at_mid = acct.delta_eps(mid);
    if (at_mid.upper() > delta_target) {
      lo = mid;
    } else {
      hi = mid;
      at_hi = at_mid;
    }
    ++res.iterations;
  }
  res.eps = hi;
  res.at = at_hi;
  return res;
}

SigmaSearchResult sigma_from_budget(long n, const HPReal& eps, const HPReal& delta, long mu) {
  if (!(eps > 0)) throw DomainError("sigma_from_budget: eps must be positive");
  if (!(delta > 0) || !(delta < 1)) throw DomainError("sigma_from_budget: delta must lie in (0,1)");
  SigmaSearchResult res;
  auto eval = [&](const HPReal& s2) { return IidAccountant(IidCompositionSpec{n, s2, mu}).delta_eps(eps); };
  // zCDP noise level for the same (eps, delta) is a natural starting point.
  HPReal L = -log(delta);
  HPReal root = sqrt(L + eps) - sqrt(L);
  HPReal rho = root * root;
  HPReal m(mu);
  HPReal hi = HPReal(n) * m * m / (2 * rho);
  IidDelta at_hi = eval(hi);
  while (at_hi.upper() > delta) {
    hi *= 2;
    at_hi = eval(hi);
    if (++res.iterations > 200) throw DomainError("sigma_from_budget: no bracket");
  }
  HPReal lo = hi / 2;
  while (eval(lo).upper() <= delta) {
    hi = lo;
    lo /= 2;
    if (++res.iterations > 400) throw DomainError("sigma_from_budget: no bracket");
  }
  at_hi = eval(hi);
  const HPReal rel("1e-7");
  while ((hi - lo) / hi > rel) {
    HPReal mid = (lo + hi) / 2;
    IidDelta at_mid = eval(mid);
    if (at_mid.upper() > delta) {
      lo = mid;
    } else {
      hi = mid;
      at_hi = at_mid;
    }
    ++res.iterations;
  }
  res.sigma2 = hi;
  res.at = at_hi;
  return res;
}

}  // namespace dpacct
