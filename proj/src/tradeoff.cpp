#include "dpacct/tradeoff.h"

#include "dpacct/dgauss.h"

#include <algorithm>

namespace dpacct {

HPReal clamp01(const HPReal& v) {
  if (v < 0) return HPReal(0);
  if (v > 1) return HPReal(1);
  return v;
}

TradeoffCurve::TradeoffCurve(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw DomainError("trade-off curve needs at least one knot");
}

HPReal TradeoffCurve::operator()(const HPReal& alpha) const {
  if (alpha <= knots_.front().alpha) return knots_.front().beta;
  if (alpha >= knots_.back().alpha) return knots_.back().beta;
  auto it = std::lower_bound(knots_.begin(), knots_.end(), alpha,
                             [](const Knot& k, const HPReal& a) { return k.alpha < a; });
  const Knot& hi = *it;
  const Knot& lo = *(it - 1);
  HPReal w = (alpha - lo.alpha) / (hi.alpha - lo.alpha);
  return lo.beta + w * (hi.beta - lo.beta);
}

void TradeoffCurve::check_invariants(const HPReal& slack) const {
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    const Knot& k = knots_[i];
    if (k.alpha < 0 || k.alpha > 1 || k.beta < -slack || k.beta > 1 + slack)
      throw DomainError("knot outside [0,1]^2");
    if (k.beta > 1 - k.alpha + slack) throw DomainError("curve exceeds 1 - alpha");
    if (i > 0) {
      if (!(k.alpha > knots_[i - 1].alpha)) throw DomainError("alpha not strictly increasing");
      if (k.beta > knots_[i - 1].beta + slack) throw DomainError("beta increasing");
    }
    if (i > 1) {
      const Knot& a = knots_[i - 2];
      const Knot& b = knots_[i - 1];
      // slope(a,b) <= slope(b,k), cross-multiplied (denominators positive)
      HPReal lhs = (b.beta - a.beta) * (k.alpha - b.alpha);
      HPReal rhs = (k.beta - b.beta) * (b.alpha - a.alpha);
      if (lhs > rhs + slack) throw DomainError("curve not convex");
    }
  }
}

TradeoffCurve single_tradeoff(const HPReal& sigma2, std::int64_t mu) {
  if (mu < 0) throw DomainError("single_tradeoff: mu must be nonnegative");
  if (mu == 0) return TradeoffCurve({Knot{HPReal(0), HPReal(1)}, Knot{HPReal(1), HPReal(0)}});
  DiscreteGaussian dist(sigma2);
  const std::int64_t lo = dist.support_lo();
  const std::int64_t hi = dist.support_hi();
  const std::size_t count = static_cast<std::size_t>(hi - lo + 2);  // t = lo-1 .. hi

  // alpha(t) = P[X > t], accumulated downward from the far tail.
  std::vector<HPReal> alpha(count);
  alpha[count - 1] = dist.tail_prob(HPReal(hi));
  for (std::size_t i = count - 1; i > 0; --i)
    alpha[i - 1] = alpha[i] + dist.pmf(lo - 1 + static_cast<std::int64_t>(i));
  // beta(t) = P[X <= t - mu], accumulated upward.
  std::vector<HPReal> beta(count);
  beta[0] = dist.cdf(HPReal(lo - 1 - mu));
  for (std::size_t i = 1; i < count; ++i)
    beta[i] = beta[i - 1] + dist.pmf(lo - 1 + static_cast<std::int64_t>(i) - mu);

  std::vector<Knot> knots;
  knots.reserve(count + 2);
  knots.push_back(Knot{HPReal(0), HPReal(1)});
  for (std::size_t i = count; i-- > 0;) knots.push_back(Knot{alpha[i], beta[i]});
  knots.push_back(Knot{HPReal(1), HPReal(0)});
  return TradeoffCurve(std::move(knots));
}

HPReal single_delta(const HPReal& sigma2, std::int64_t mu, const HPReal& eps) {
  if (mu <= 0) throw DomainError("single_delta: mu must be positive");
  if (eps < 0) throw DomainError("single_delta: eps must be nonnegative");
  DiscreteGaussian dist(sigma2);
  HPReal m(static_cast<long long>(mu));
  HPReal c = eps * sigma2 / m;
  return profile_from_pllr(dist.tail_prob(c - m / 2), dist.tail_prob(c + m / 2), eps);
}

TwofoldConstants twofold_constants(const HPReal& sigma2) {
  HPReal half = sigma2 / 2;  // e^{-y^2/sigma2} = e^{-y^2/(2 (sigma2/2))}
  return TwofoldConstants{normalizer(HPReal(0), half), normalizer(HPReal(1) / 2, half),
                          normalizer(HPReal(0), sigma2)};
}

TradeoffCurve twofold_knots(const HPReal& sigma2, std::int64_t mu) {
  if (mu <= 0) throw DomainError("twofold_knots: mu must be positive");
  auto c = twofold_constants(sigma2);
  const HPReal sigma = sqrt(sigma2);
  // Weights are materialized far enough out to be negligible at working precision.
  HPReal reach = 2 * sigma * sqrt(HPReal(precision() + 10) * log(HPReal(10))) + 2;
  const std::int64_t R = reach.convert_to<long long>() + 2 * mu;
  const std::int64_t Rk = HPReal(ceil(16 * sqrt(HPReal(2)) * sigma)).convert_to<long long>();
  const HPReal scale_even = c.c_int / (c.c_single * c.c_single);
  const HPReal scale_odd = c.c_half / (c.c_single * c.c_single);

  // w(s) = P[X1 + X2 = s] from the two-lattice decomposition.
  std::vector<HPReal> w(static_cast<std::size_t>(2 * R + 1));
  for (std::int64_t s = -R; s <= R; ++s) {
    HPReal hs = HPReal(s) / 2;
    HPReal g = exp(-hs * hs / sigma2);
    w[static_cast<std::size_t>(s + R)] = g * ((s % 2 == 0) ? scale_even : scale_odd);
  }
  std::vector<HPReal> suffix(w.size() + 1, HPReal(0));  // suffix[i] = sum_{j >= i} w[j]
  for (std::size_t i = w.size(); i-- > 0;) suffix[i] = suffix[i + 1] + w[i];
  std::vector<HPReal> prefix(w.size() + 1, HPReal(0));  // prefix[i] = sum_{j < i} w[j]
  for (std::size_t i = 0; i < w.size(); ++i) prefix[i + 1] = prefix[i] + w[i];

  auto alpha_at = [&](std::int64_t t) { return suffix[static_cast<std::size_t>(t + 1 + R)]; };
  auto beta_at = [&](std::int64_t t) {  // P_Q[S <= t] = P[S <= t - 2 mu]
    std::int64_t u = t - 2 * mu;
    if (u < -R) return HPReal(0);
    return prefix[static_cast<std::size_t>(u + R + 1)];
  };

  std::vector<Knot> knots;
  knots.push_back(Knot{HPReal(0), HPReal(1)});
  for (std::int64_t t = Rk; t >= -Rk - 1; --t) knots.push_back(Knot{alpha_at(t), beta_at(t)});
  knots.push_back(Knot{HPReal(1), HPReal(0)});
  return TradeoffCurve(std::move(knots));
}

HPReal LatticePmf::at(std::int64_t s) const {
  std::int64_t i = s - lo;
  if (i < 0 || i >= static_cast<std::int64_t>(p.size())) return HPReal(0);
  return p[static_cast<std::size_t>(i)];
}

HPReal LatticePmf::tail(const HPReal& t) const {
  std::int64_t first = floor(t).convert_to<long long>() + 1 - lo;
  if (first < 0) first = 0;
  HPReal s = 0;
  for (std::int64_t i = static_cast<std::int64_t>(p.size()) - 1; i >= first; --i) s += p[static_cast<std::size_t>(i)];
  return s;
}

LatticePmf convolve(const LatticePmf& a, const LatticePmf& b) {
  LatticePmf out;
  out.lo = a.lo + b.lo;
  out.p.assign(a.p.size() + b.p.size() - 1, HPReal(0));
  for (std::size_t i = 0; i < a.p.size(); ++i)
    for (std::size_t j = 0; j < b.p.size(); ++j) out.p[i + j] += a.p[i] * b.p[j];
  return out;
}

LatticePmf nfold_pmf(int n, const HPReal& sigma2) {
  if (n < 1) throw DomainError("nfold_pmf: n must be positive");
  DiscreteGaussian dist(sigma2);
  LatticePmf base{dist.support_lo(), dist.truncated_pmf()};
  LatticePmf acc = base;
  for (int i = 1; i < n; ++i) acc = convolve(acc, base);
  return acc;
}

HPReal nfold_convolution_delta(int n, const HPReal& sigma2, std::int64_t mu, const HPReal& eps) {
  if (n < 1 || n > 4) throw DomainError("nfold_convolution_delta: n must be in 1..4");
  if (mu <= 0) throw DomainError("nfold_convolution_delta: mu must be positive");
  LatticePmf s = nfold_pmf(n, sigma2);
  HPReal m(static_cast<long long>(mu));
  HPReal c = sigma2 * eps / m;
  HPReal shift = HPReal(n) * m / 2;
  return profile_from_pllr(s.tail(c - shift), s.tail(c + shift), eps);
}

TradeoffCurve parallel_min(const std::vector<TradeoffCurve>& curves) {
  if (curves.empty()) throw DomainError("parallel_min: empty list");
  std::vector<Knot> pts;
  for (const auto& c : curves) pts.insert(pts.end(), c.knots().begin(), c.knots().end());
  std::sort(pts.begin(), pts.end(), [](const Knot& a, const Knot& b) {
    return a.alpha < b.alpha || (a.alpha == b.alpha && a.beta < b.beta);
  });
  // Lower convex hull (monotone chain); duplicates in alpha keep the lowest beta.
  std::vector<Knot> hull;
  for (const auto& p : pts) {
    if (!hull.empty() && hull.back().alpha == p.alpha) continue;
    while (hull.size() >= 2) {
      const Knot& a = hull[hull.size() - 2];
      const Knot& b = hull.back();
      HPReal cross = (b.alpha - a.alpha) * (p.beta - a.beta) - (b.beta - a.beta) * (p.alpha - a.alpha);
      if (cross <= 0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  return TradeoffCurve(std::move(hull));
}

HPReal curve_to_profile(const TradeoffCurve& curve, const HPReal& eps) {
  HPReal ee = exp(eps);
  HPReal best = -ee * curve.knots().front().alpha - curve.knots().front().beta;
  for (const auto& k : curve.knots()) {
    HPReal v = -ee * k.alpha - k.beta;
    if (v > best) best = v;
  }
  return clamp01(1 + best);
}

HPReal profile_from_pllr(const HPReal& tail_up, const HPReal& tail_down, const HPReal& eps) {
  return clamp01(tail_up - exp(eps) * tail_down);
}

HPReal curve_from_profile(const std::vector<PrivacyPoint>& profile, const HPReal& alpha) {
  HPReal best = 0;
  for (const auto& pt : profile) {
    HPReal ee = exp(pt.eps);
    HPReal a = 1 - pt.delta - ee * alpha;
    HPReal b = (1 - pt.delta - alpha) / ee;
    if (a > best) best = a;
    if (b > best) best = b;
  }
  return best;
}

}  // namespace dpacct
