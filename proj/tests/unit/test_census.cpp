#include <doctest.h>

#include "dpacct/census.h"
#include "dpacct/zcdp.h"

#include <algorithm>
#include <string>

using namespace dpacct;

namespace {

const char* const kSmall =
    "schema_version = 1\n"
    "name = small\n"
    "rho = 0.4\n"
    "n_ref = 1\n"
    "lattice_scale = 4\n"
    "\n"
    "[groups]\n"
    "a | 0.25 | 2 | A1, A2\n"
    "b | 0.5 | 1\n";

int error_line(const std::string& text) {
  try {
    parse_allocation(text, "t.alloc");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).rfind("t.alloc:", 0) == 0);
    return e.line();
  }
  return -1;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  auto at = text.find(from);
  REQUIRE(at != std::string::npos);
  return text.replace(at, from.size(), to);
}

}  // namespace

TEST_SUITE("census") {
  TEST_CASE("parses a small allocation") {
    auto f = parse_allocation(kSmall, "t.alloc");
    CHECK(f.name == "small");
    CHECK(f.config.rho == HPReal("0.4"));
    CHECK(f.config.L == 4);
    CHECK(f.config.n_ref == 1);
    REQUIRE(f.config.groups.size() == 2);
    CHECK(f.config.groups[0].levels == std::vector<std::string>{"A1", "A2"});
    CHECK(f.config.groups[1].levels.empty());
    CHECK(f.delta_per_level == HPReal("1e-11"));
    CHECK(f.delta_overall == HPReal("1e-10"));
  }

  TEST_CASE("errors carry line numbers") {
    std::string t = kSmall;
    CHECK(error_line(replace(t, "rho = 0.4", "rho = abc")) == 3);
    CHECK(error_line(replace(t, "rho = 0.4", "rho = -1")) == 3);
    CHECK(error_line(replace(t, "name = small", "colour = red")) == 2);
    CHECK(error_line(replace(t, "name = small", "rho = 1")) == 3);
    CHECK(error_line(replace(t, "[groups]", "[other]")) == 7);
    CHECK(error_line(replace(t, "b | 0.5 | 1", "b | 0.5")) == 9);
    CHECK(error_line(replace(t, "b | 0.5 | 1", "b | 1.5 | 1")) == 9);
    CHECK(error_line(replace(t, "b | 0.5 | 1", "b | 0.3 | 1")) == 9);
    CHECK(error_line(replace(t, "b | 0.5 | 1", "a | 0.5 | 1")) == 9);
    CHECK(error_line(replace(t, "2 | A1, A2", "3 | A1, A2")) == 8);
    CHECK(error_line(replace(t, "2 | A1, A2", "2.5 | A1, A2")) == 8);
    CHECK(error_line(replace(t, "b | 0.5 | 1", "b | 0.25 | 1")) == 7);
    CHECK(error_line(replace(t, "schema_version = 1", "schema_version = 2")) == 1);
    CHECK(error_line(replace(t, "schema_version = 1\n", "")) == 0);
  }

  TEST_CASE("bundled presets") {
    auto names = preset_names();
    CHECK(names.size() == 3);
    for (const auto& n : names) CHECK_NOTHROW(load_preset(n).config.validate_thresholds());
    CHECK_THROWS_AS(load_preset("nope"), SpecError);
    auto census = load_allocation_or_preset("census_2022_08_25");
    CHECK(census.config.rho == HPReal("3.65"));
    CHECK(census.config.groups.size() == 7);
    auto acs = load_preset("acs_5yr_1890").config;
    CHECK(abs(sigmas_from_allocation(acs)[0] - 25) < HPReal("1e-60"));
    auto c1940 = load_preset("census_1940_98").config;
    CHECK(abs(sigmas_from_allocation(c1940)[0] - HPReal("12.25")) < HPReal("1e-60"));
  }

  TEST_CASE("census levels") {
    auto lv = levels(load_preset("census_2022_08_25").config);
    REQUIRE(lv.size() == 8);
    const char* names[] = {"US", "State", "County", "PEPG", "Tract Subset Group", "Tract Subset",
                           "Optimized Block Group", "Block"};
    for (std::size_t i = 0; i < 8; ++i) {
      CHECK(lv[i].name == names[i]);
      CHECK(lv[i].n_queries == 10);
    }
    CHECK(abs(lv[0].sigma2 - HPReal("68.4931506849315068493")) < HPReal("1e-15"));
    CHECK(lv[3].sigma2 == lv[4].sigma2);
    CHECK(lv[3].group == lv[4].group);
    // Composed zCDP budget of all levels is rho.
    std::vector<ZcdpBudget> parts;
    for (const auto& l : lv) parts.push_back(ZcdpBudget{HPReal(l.n_queries) / (2 * l.sigma2)});
    CHECK(abs(compose(parts).rho - HPReal("3.65")) < HPReal("1e-60"));
  }

  TEST_CASE("level report") {
    auto rows = level_report(load_preset("census_2022_08_25").config, HPReal("1e-11"));
    REQUIRE(rows.size() == 8);
    const char* bureau_sigma[] = {"68.49", "5", "16.12", "10.46", "10.46", "5.76", "11.61", "456.62"};
    const char* ours_sigma[] = {"54.19", "4.25", "13.28", "8.72", "8.72", "4.87", "9.65", "343.27"};
    const char* var_red[] = {"20.88", "15.08", "17.58", "16.62", "16.62", "15.33", "16.89", "24.82"};
    for (std::size_t i = 0; i < 8; ++i) {
      const auto& r = rows[i];
      CAPTURE(r.level);
      CHECK(abs(r.sigma2_bureau / HPReal(bureau_sigma[i]) - 1) < HPReal("0.01"));
      CHECK(abs(r.sigma2_ours / HPReal(ours_sigma[i]) - 1) < HPReal("0.01"));
      CHECK(abs(r.var_reduction_pct - HPReal(var_red[i])) < HPReal("0.5"));
      CHECK(r.eps_fdp < r.eps_zcdp);
      CHECK(r.reduction_pct >= HPReal(8));
      CHECK(r.reduction_pct <= HPReal("14.3"));
    }
    CHECK(abs(rows[1].eps_zcdp - HPReal("11.07")) < HPReal("0.01"));
    CHECK(abs(rows[1].eps_fdp - HPReal("10.13")) < HPReal("0.02"));
    CHECK(abs(rows[7].eps_fdp - HPReal("0.92")) < HPReal("0.02"));
    auto csv = level_report_csv(rows);
    CHECK(csv.rfind("level,sigma2_bureau,eps_zcdp,eps_fdp,reduction_pct,sigma2_ours,var_reduction_pct\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
  }

  TEST_CASE("curve lies below the zCDP conversion") {
    IidCompositionSpec spec{10, HPReal(5)};
    std::vector<HPReal> grid;
    for (int i = 1; i <= 24; ++i) grid.push_back(HPReal(i) / 2);
    auto rows = curve(spec, grid);
    REQUIRE(rows.size() == grid.size());
    for (const auto& r : rows) {
      CHECK(r.delta_fdp >= 0);
      CHECK(r.delta_fdp <= 1);
      CHECK(r.delta_fdp <= r.delta_zcdp);
      CHECK(r.delta_zcdp == delta_from_rho(HPReal(1), r.eps));
    }
    CHECK(curve_csv(rows).rfind("eps,delta_fdp,delta_zcdp\n", 0) == 0);
  }
}
