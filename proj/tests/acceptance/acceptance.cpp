// Prints one PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
// Usage: acceptance [criterion ...]   (default: all ten)

#include "dpacct/census.h"
#include "dpacct/dgauss.h"
#include "dpacct/iid_accountant.h"
#include "dpacct/inid_accountant.h"
#include "dpacct/sim.h"
#include "dpacct/tradeoff.h"
#include "dpacct/zcdp.h"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

using namespace dpacct;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss: " << what << "]";
    }
  }
};

std::string sci(const HPReal& v, int digits = 4) { return to_sci(v, digits); }

bool near(const HPReal& v, const char* target, const char* tol) { return abs(v - HPReal(target)) <= HPReal(tol); }

const HPReal kDeltaLevel("1e-11");
const HPReal kDeltaOverall("1e-10");
const HPReal kEpsOverall("21.97");

AllocationConfig census() { return load_preset("census_2022_08_25").config; }

void zcdp_baselines(Outcome& o) {
  HPReal a = eps_from_rho(HPReal("3.65"), kDeltaOverall);
  HPReal b = eps_from_rho(HPReal("1.0001"), kDeltaLevel);
  HPReal c = eps_from_rho(HPReal("0.0730"), kDeltaLevel);
  o.detail << "eps " << sci(a, 6) << ", " << sci(b, 6) << ", " << sci(c, 6);
  o.check(near(a, "21.97", "0.01"), "21.97");
  o.check(near(b, "11.07", "0.01"), "11.07");
  o.check(near(c, "2.79", "0.01"), "2.79");
}

std::vector<LevelRow>& census_rows() {
  static std::vector<LevelRow> rows = level_report(census(), kDeltaLevel);
  return rows;
}

void iid_epsilons(Outcome& o) {
  auto state = eps_from_delta(IidCompositionSpec{10, HPReal(5)}, kDeltaLevel).eps;
  auto block = eps_from_delta(IidCompositionSpec{10, HPReal("456.62")}, kDeltaLevel).eps;
  o.detail << "eps(5) " << sci(state, 5) << ", eps(456.62) " << sci(block, 5) << ", reductions";
  o.check(near(state, "10.13", "0.02"), "10.13");
  o.check(near(block, "0.92", "0.02"), "0.92");
  for (const auto& r : census_rows()) {
    o.detail << ' ' << r.reduction_pct.str(4, std::ios_base::fixed);
    o.check(r.reduction_pct >= 8 && r.reduction_pct <= HPReal("14.3"), r.level);
  }
}

void noise_inversion(Outcome& o) {
  const char* ours[] = {"54.19", "4.25", "13.28", "8.72", "8.72", "4.87", "9.65", "343.27"};
  const char* red[] = {"20.88", "15.08", "17.58", "16.62", "16.62", "15.33", "16.89", "24.82"};
  auto& rows = census_rows();
  o.detail << "sigma2";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    o.detail << ' ' << rows[i].sigma2_ours.str(5);
    o.check(abs(rows[i].sigma2_ours / HPReal(ours[i]) - 1) <= HPReal("0.01"), rows[i].level + " sigma2");
    o.check(abs(rows[i].var_reduction_pct - HPReal(red[i])) <= HPReal("0.5"), rows[i].level + " reduction");
  }
}

void residuals(Outcome& o) {
  auto r = residual_bound(10, HPReal(5));
  auto r10 = residual_bound(10, HPReal(10));
  o.detail << "r(10,5) " << sci(r.r) << " (" << sci(r.omega1) << ", " << sci(r.omega2) << ", " << sci(r.omega3)
           << "), r(10,10) " << sci(r10.r);
  o.check(r.r <= HPReal("3e-37"), "r(10,5)");
  o.check(r.omega1 < HPReal("3e-37"), "omega1");
  o.check(r.omega2 < HPReal("3e-106"), "omega2");
  o.check(r.omega3 < HPReal("2e-110"), "omega3");
  o.check(r10.r <= HPReal("3e-75"), "r(10,10)");
  struct Row {
    long n;
    const char* s1;
    const char* s5;
    const char* s10;
  };
  const Row table[] = {{5, "5e-6", "3e-32", "2e-65"},  {9, "5e-7", "1e-36", "4e-74"}, {10, "4e-7", "3e-37", "3e-75"},
                       {18, "2e-7", "2e-39", "2e-79"}, {20, "9e-8", "8e-40", "4e-80"}, {27, "7e-8", "2e-40", "2e-81"},
                       {50, "4e-8", "2e-41", "3e-83"}, {100, "2e-8", "6e-42", "3e-84"}};
  for (const auto& row : table) {
    std::string n = std::to_string(row.n);
    HPReal v1 = residual_bound(row.n, HPReal(1)).r;
    HPReal v5 = residual_bound(row.n, HPReal(5)).r;
    HPReal v10 = residual_bound(row.n, HPReal(10)).r;
    o.check(v1 <= 10 * HPReal(row.s1) && v1 >= HPReal(row.s1) / 10, "table n=" + n + " sigma2=1");
    o.check(v5 <= HPReal(row.s5) && v5 >= HPReal(row.s5) / 10, "table n=" + n + " sigma2=5");
    o.check(v10 <= HPReal(row.s10) && v10 >= HPReal(row.s10) / 10, "table n=" + n + " sigma2=10");
    o.check(residual_bound(row.n, HPReal(16)).r < HPReal("1e-100"), "table n=" + n + " sigma2=16");
  }
}

void oracle_soundness(Outcome& o) {
  HPReal worst = 0;
  int cases = 0;
  for (int n : {2, 3})
    for (const char* s : {"1", "5"}) {
      for (const char* e : {"0", "0.5", "1", "2", "5"}) {
        auto d = delta_eps(IidCompositionSpec{n, HPReal(s)}, HPReal(e));
        HPReal gap = abs(d.delta - nfold_convolution_delta(n, HPReal(s), 1, HPReal(e)));
        ++cases;
        o.check(gap <= d.ledger.total(), "n=" + std::to_string(n) + " sigma2=" + s + " eps=" + e);
        HPReal used = d.ledger.total() > 0 ? gap / d.ledger.total() : HPReal(0);
        if (used > worst) worst = used;
      }
      auto pmf = nfold_pmf(n, HPReal(s));
      HPReal B = sqrt(HPReal(n) * HPReal(s)), sup = 0;
      for (std::size_t j = 0; j < pmf.p.size(); ++j) {
        HPReal y = HPReal(pmf.lo + static_cast<std::int64_t>(j)) / B;
        HPReal g = abs(pmf.p[j] - exp(-y * y / 2) / sqrt(2 * hp_pi()) / B);
        if (g > sup) sup = g;
      }
      o.check(sup <= residual_bound(n, HPReal(s)).r, "pmf residual n=" + std::to_string(n) + " sigma2=" + s);
    }
  o.detail << cases << " profile cases, largest gap/ledger " << sci(worst, 3);
}

void census_ledger(Outcome& o) {
  auto config = census();
  InidAccountant acc(config);
  auto th = thresholds(config, kEpsOverall);
  auto w = acc.window(th.t_eps);
  auto tr = acc.truncation_errors();
  HPReal e1 = acc.tail_error(w);
  HPReal b("0.01");
  auto sv = acc.sieve(b);
  HPReal e2 = acc.domain_error(w, sv, b);
  HPReal m6 = acc.sixth_derivative_bound(w);
  HPReal e3 = boole_error_bound(default_overall_quadrature(10'000'001), m6);
  o.detail << "E0_2 " << sci(tr.e02) << ", E1 " << sci(e1) << ", E2 " << sci(e2) << ", M6 " << sci(m6) << ", E3 "
           << sci(e3);
  o.check(tr.e02 <= HPReal("3.4e-29"), "E0_2");
  o.check(e1 <= HPReal("5.6e-29"), "E1");
  o.check(e2 <= HPReal("1.3e-30"), "E2");
  o.check(m6 <= HPReal("1.2e35"), "M6");
  o.check(e3 <= HPReal("2.54e-24"), "E3");
}

void overall_budget(Outcome& o) {
  auto config = census();
  auto quad = default_overall_quadrature(400001);
  auto found = overall_eps(config, kDeltaOverall, quad);
  auto at = overall_delta(config, kEpsOverall, quad);
  o.detail << "eps " << found.eps.str(7) << " (delta " << sci(found.at.delta_upper) << ", " << found.evaluations
           << " evaluations), delta(21.97) " << sci(at.delta_upper);
  o.check(near(found.eps, "20.68", "0.10"), "eps 20.68");
  o.check(at.delta_upper <= kDeltaOverall, "delta(21.97)");
}

void uniform_scaling(Outcome& o) {
  auto r = uniform_scale_search(census(), kEpsOverall, kDeltaOverall, default_overall_quadrature(400001));
  HPReal pct = 100 * r.reduction();
  o.detail << "m " << r.m.str(7) << ", reduction " << pct.str(5) << "% (delta " << sci(r.at.delta_upper) << ")";
  o.check(!r.flagged, "unflagged");
  o.check(near(pct, "8.59", "0.5"), "8.59%");
}

void distribution_facts(Outcome& o) {
  struct Band {
    const char* s2;
    const char* bound;
  };
  const Band bands[] = {{"4.25", "5.8e-34"}, {"5", "2.8e-40"}, {"10", "2.8e-40"}, {"68.49", "1.5e-82"},
                        {"456.62", "1.5e-82"}};
  o.detail << "gaps";
  for (const auto& b : bands) {
    HPReal gap = DiscreteGaussian(HPReal(b.s2)).variance_deficit();
    o.detail << ' ' << sci(gap, 3);
    o.check(gap > 0 && gap < HPReal(b.bound), std::string("gap ") + b.s2);
  }
  for (const char* s : {"1", "5"}) o.check(mean_bias(HPReal("0.25"), HPReal(s)) < 0, std::string("mean bias ") + s);
  HPReal s2("68.49");
  auto noisy = privatize(constant_dataset(1000000, 0), s2, 1);
  long double sum = 0, sq = 0;
  for (auto v : noisy) {
    sum += v;
    sq += static_cast<long double>(v) * v;
  }
  long double mean = sum / noisy.size();
  double var = static_cast<double>(sq / noisy.size() - mean * mean);
  o.detail << ", sample var " << var;
  o.check(std::abs(var / s2.convert_to<double>() - 1) < 0.01, "sampler variance");
  std::mt19937_64 rng(20240);
  std::uniform_real_distribution<double> u(0.3, 30.0);
  for (int i = 0; i < 20; ++i) {
    HPReal s(u(rng));
    std::int64_t mu = 1 + static_cast<std::int64_t>(rng() % 4);
    try {
      single_tradeoff(s, mu).check_invariants(HPReal("1e-70"));
    } catch (const std::exception& e) {
      o.check(false, e.what());
    }
  }
}

void mse_ratio(Outcome& o) {
  auto data = constant_dataset(1000000, 1000, "synthetic");
  double ours = simulate(data, HPReal("54.19"), 1)[0].mse;
  double bureau = simulate(data, HPReal("68.49"), 2)[0].mse;
  double ratio = ours / bureau;
  o.detail << "mse " << ours << " / " << bureau << " = " << ratio;
  o.check(std::abs(ratio - 0.791) <= 0.01, "ratio 0.791");
}

}  // namespace

int main(int argc, char** argv) {
  set_precision(precision_from_env(kDefaultDigits));
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria = {
      {"zCDP baselines", zcdp_baselines},
      {"i.i.d. accountant epsilon", iid_epsilons},
      {"noise inversion", noise_inversion},
      {"residual bounds", residuals},
      {"oracle soundness", oracle_soundness},
      {"census ledger constants", census_ledger},
      {"overall budget (slow)", overall_budget},
      {"uniform noise scaling (slow)", uniform_scaling},
      {"distribution facts", distribution_facts},
      {"simulation MSE ratio", mse_ratio},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " [error: " << e.what() << "]";
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failures;
    char t[32];
    std::snprintf(t, sizeof t, "%.1fs", secs);
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first << "  "
              << o.detail.str() << "  (" << t << ")" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
