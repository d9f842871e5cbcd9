#include <doctest.h>

#include "dpacct/census.h"
#include "dpacct/dgauss.h"
#include "dpacct/iid_accountant.h"
#include "dpacct/tradeoff.h"
#include "dpacct/zcdp.h"

using namespace dpacct;

namespace {

// sup over the lattice of |P[S_n = y] - phi(y)/B_n| from the exact convolution pmf.
HPReal convolution_residual(int n, const HPReal& sigma2) {
  auto pmf = nfold_pmf(n, sigma2);
  HPReal B = sqrt(HPReal(n) * sigma2);
  HPReal norm = sqrt(2 * hp_pi());
  HPReal sup = 0;
  for (std::size_t j = 0; j < pmf.p.size(); ++j) {
    HPReal y = HPReal(pmf.lo + static_cast<std::int64_t>(j)) / B;
    HPReal gap = abs(pmf.p[j] - exp(-y * y / 2) / norm / B);
    if (gap > sup) sup = gap;
  }
  return sup;
}

}  // namespace

TEST_SUITE("iid") {
  TEST_CASE("spec validation") {
    CHECK_THROWS_AS((IidCompositionSpec{0, HPReal(1)}.validate()), DomainError);
    CHECK_THROWS_AS((IidCompositionSpec{2, HPReal(0)}.validate()), DomainError);
    CHECK_THROWS_AS((IidCompositionSpec{2, HPReal(1), 0}.validate()), DomainError);
    CHECK(abs(IidCompositionSpec{10, HPReal(5)}.B() - sqrt(HPReal(50))) < HPReal("1e-70"));
  }

  TEST_CASE("characteristic function") {
    IidCompositionSpec spec{2, HPReal(5)};
    CHECK(char_fn(spec, HPReal(0)) == 1);
    CHECK(char_fn(spec, HPReal("1.5")) == char_fn(spec, HPReal("-1.5")));
    DiscreteGaussian d{HPReal(5)};
    HPReal B = spec.B(), single = 0;
    for (std::int64_t x = d.support_lo(); x <= d.support_hi(); ++x) single += d.pmf(x) * cos(HPReal(x) / B);
    CHECK(abs(char_fn(spec, HPReal(1)) - single * single) < HPReal("1e-50"));
    HPReal prev = 2;
    HPReal top = hp_pi() * spec.B();
    for (int i = 0; i < 40; ++i) {
      HPReal v = char_fn(spec, top * i / 40);
      CHECK(v < prev);
      prev = v;
    }
  }

  TEST_CASE("characteristic function at the edge of the first period") {
    IidCompositionSpec spec{10, HPReal(5)};
    HPReal edge = hp_pi() * spec.B();
    HPReal t = floor(edge);
    CHECK((edge - t) / edge * char_fn(spec, t) < HPReal("2.02e-106"));
  }

  TEST_CASE("residual components") {
    auto r = residual_bound(10, HPReal(5));
    CHECK(r.r <= HPReal("3e-37"));
    CHECK(r.omega1 < HPReal("2.57e-37"));
    CHECK(r.omega2 < HPReal("2.1e-106"));
    CHECK(r.omega3 < HPReal("1.45e-110"));
    CHECK(r.r == r.omega1 + r.omega2 + r.omega3);
    CHECK(residual_bound(10, HPReal(10)).r <= HPReal("3e-75"));
    CHECK(residual_bound(10, HPReal("0.5")).small_sigma);
  }

  TEST_CASE("residual never exceeds the published table") {
    struct Row {
      long n;
      const char* s1;
      const char* s5;
      const char* s10;
    };
    const Row rows[] = {{5, "5e-6", "3e-32", "2e-65"},    {9, "5e-7", "1e-36", "4e-74"},
                        {10, "4e-7", "3e-37", "3e-75"},   {18, "2e-7", "2e-39", "2e-79"},
                        {20, "9e-8", "8e-40", "4e-80"},   {27, "7e-8", "2e-40", "2e-81"},
                        {50, "4e-8", "2e-41", "3e-83"},   {100, "2e-8", "6e-42", "3e-84"}};
    for (const auto& row : rows) {
      CAPTURE(row.n);
      CHECK(residual_bound(row.n, HPReal(1)).r <= HPReal(row.s1));
      CHECK(residual_bound(row.n, HPReal(5)).r <= HPReal(row.s5));
      CHECK(residual_bound(row.n, HPReal(10)).r <= HPReal(row.s10));
      CHECK(residual_bound(row.n, HPReal(16)).r < HPReal("1e-100"));
      CHECK(residual_bound(row.n, HPReal(1)).r > HPReal(row.s1) / 10);
      CHECK(residual_bound(row.n, HPReal(5)).r > HPReal(row.s5) / 10);
      CHECK(residual_bound(row.n, HPReal(10)).r > HPReal(row.s10) / 10);
    }
  }

  TEST_CASE("residual dominates the exact pmf gap") {
    for (int n : {2, 3})
      for (const char* s : {"1", "5"}) {
        CAPTURE(n);
        CAPTURE(s);
        HPReal gap = convolution_residual(n, HPReal(s));
        CHECK(gap <= residual_bound(n, HPReal(s)).r);
      }
  }

  TEST_CASE("ledger covers the exact profile") {
    for (int n : {2, 3})
      for (const char* s : {"1", "5"})
        for (const char* e : {"0", "0.5", "1", "2", "5"}) {
          CAPTURE(n);
          CAPTURE(s);
          CAPTURE(e);
          IidCompositionSpec spec{n, HPReal(s)};
          auto approx = delta_eps(spec, HPReal(e));
          HPReal exact = nfold_convolution_delta(n, HPReal(s), 1, HPReal(e));
          CHECK(abs(approx.delta - exact) <= approx.ledger.total());
        }
  }

  TEST_CASE("ledger terms") {
    auto d = delta_eps(IidCompositionSpec{10, HPReal(5)}, HPReal(3));
    for (const char* t : {"E11", "E12", "E21", "E22"}) CHECK(d.ledger.has(t));
    CHECK(d.ledger.get("E12") <= exp(HPReal(-200)));
    CHECK(d.upper() == d.delta + d.ledger.total());
    CHECK_FALSE(d.flagged);
    CHECK(delta_eps(IidCompositionSpec{10, HPReal(5)}, HPReal(3), HPReal("1e-60")).flagged);
    CHECK_THROWS_AS(delta_eps(IidCompositionSpec{10, HPReal(5)}, HPReal(-1)), DomainError);
  }

  TEST_CASE("empty summation range far out") {
    auto d = delta_eps(IidCompositionSpec{10, HPReal(5)}, HPReal(400));
    CHECK(d.delta <= d.ledger.total() + exp(HPReal(-200)));
  }

  TEST_CASE("profile is monotone and bounded") {
    for (const char* s : {"1", "5", "68.49"}) {
      IidAccountant acc{IidCompositionSpec{10, HPReal(s)}};
      HPReal prev = 2;
      for (int i = 0; i <= 40; ++i) {
        HPReal d = acc.delta_eps(HPReal(i) / 4).delta;
        CHECK(d >= 0);
        CHECK(d <= 1);
        CHECK(d <= prev);
        prev = d;
      }
    }
  }

  TEST_CASE("published state and block budgets") {
    auto state = eps_from_delta(IidCompositionSpec{10, HPReal(5)}, HPReal("1e-11"));
    CHECK(abs(state.eps - HPReal("10.13")) <= HPReal("0.02"));
    CHECK(state.at.upper() <= HPReal("1e-11"));
    auto block = eps_from_delta(IidCompositionSpec{10, HPReal("456.62")}, HPReal("1e-11"));
    CHECK(abs(block.eps - HPReal("0.92")) <= HPReal("0.02"));
    auto us = eps_from_delta(IidCompositionSpec{10, HPReal("68.49")}, HPReal("1e-11"));
    HPReal reduction = 100 * (1 - us.eps / HPReal("2.79"));
    CHECK(us.eps < HPReal("2.79"));
    CHECK(reduction >= HPReal("8.50"));
    CHECK(reduction <= HPReal("13.76"));
  }

  TEST_CASE("round trip through the profile") {
    IidCompositionSpec spec{10, HPReal(5)};
    for (const char* e : {"4", "6", "8", "11"}) {
      auto d = delta_eps(spec, HPReal(e));
      auto back = eps_from_delta(spec, d.upper());
      CAPTURE(e);
      CHECK(abs(back.eps - HPReal(e)) <= HPReal("2e-4"));
    }
  }

  TEST_CASE("search flags an unreachable target") {
    auto r = eps_from_delta(IidCompositionSpec{2, HPReal(1000)}, HPReal("0.5"));
    CHECK(r.flagged);
    CHECK(r.eps == 0);
    CHECK_THROWS_AS(eps_from_delta(IidCompositionSpec{2, HPReal(5)}, HPReal(0)), DomainError);
  }

  TEST_CASE("noise reduction at fixed budget") {
    HPReal eps_us = eps_from_rho(HPReal(10) / (2 * HPReal("68.49")), HPReal("1e-11"));
    auto us = sigma_from_budget(10, eps_us, HPReal("1e-11"));
    CHECK(abs(us.sigma2 - HPReal("54.19")) <= HPReal("0.5"));
    CHECK(us.at.upper() <= HPReal("1e-11"));
    // Slightly less noise must violate the budget.
    auto below = delta_eps(IidCompositionSpec{10, us.sigma2 * HPReal("0.999")}, eps_us);
    CHECK(below.upper() > HPReal("1e-11"));
    CHECK_THROWS_AS(sigma_from_budget(10, HPReal(0), HPReal("1e-11")), DomainError);
  }

  TEST_CASE("every census level improves on the zCDP conversion") {
    auto config = load_preset("census_2022_08_25").config;
    for (const auto& lv : levels(config)) {
      HPReal s2 = lv.sigma2;
      HPReal zcdp = eps_from_rho(HPReal(lv.n_queries) / (2 * s2), HPReal("1e-11"));
      auto ours = eps_from_delta(IidCompositionSpec{lv.n_queries, s2}, HPReal("1e-11"));
      CAPTURE(lv.name);
      CHECK(ours.eps < zcdp);
    }
  }
}
