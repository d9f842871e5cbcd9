#include "cli.h"

#include "dpacct/census.h"
#include "dpacct/dgauss.h"
#include "dpacct/iid_accountant.h"
#include "dpacct/inid_accountant.h"
#include "dpacct/sim.h"
#include "dpacct/tradeoff.h"
#include "dpacct/zcdp.h"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

namespace dpacct::cli {

namespace {

struct LedgerViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  unsigned precision = 0;
  std::int64_t boole_n = 400001;
  std::uint64_t seed = 1;
  std::string max_ledger;
  unsigned threads = 1;
  std::string out_path;
};

// Rows of "term,value".
class KeyValue {
 public:
  void add(const std::string& k, const std::string& v) { os_ << k << ',' << v << '\n'; }
  void add(const std::string& k, const HPReal& v) { add(k, to_sci(v)); }
  void raw(const std::string& s) { os_ << s; }
  std::string str() const { return "term,value\n" + os_.str(); }

 private:
  std::ostringstream os_;
};

void check_ledger(const Globals& g, const HPReal& total) {
  if (g.max_ledger.empty()) return;
  HPReal cap = hp(g.max_ledger);
  if (total > cap) throw LedgerViolation("ledger total " + to_sci(total, 6) + " exceeds --max-ledger " + g.max_ledger);
}

std::vector<HPReal> parse_eps_grid(const std::string& list, const std::string& range) {
  std::vector<HPReal> grid;
  if (!list.empty()) {
    std::istringstream in(list);
    std::string tok;
    while (std::getline(in, tok, ',')) grid.push_back(hp(tok));
  }
  if (!range.empty()) {
    std::istringstream in(range);
    std::string lo, hi, count;
    if (!std::getline(in, lo, ':') || !std::getline(in, hi, ':') || !std::getline(in, count))
      throw SpecError("--eps-range expects lo:hi:count");
    long n = std::stol(count);
    if (n < 2) throw SpecError("--eps-range count must be at least 2");
    HPReal a = hp(lo), b = hp(hi);
    for (long i = 0; i < n; ++i) grid.push_back(a + (b - a) * i / (n - 1));
  }
  if (grid.empty()) throw SpecError("curve: give --eps or --eps-range");
  return grid;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"High-precision accountant for discrete Gaussian mechanisms", "dpacct"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--precision", g.precision, "working precision in decimal digits (default $ACCOUNTANT_PRECISION or 80)")
      ->check(CLI::Range(20u, 100000u));
  app.add_option("--boole-n", g.boole_n, "Boole quadrature points for overall (N-1 divisible by 4)")
      ->capture_default_str();
  app.add_option("--seed", g.seed, "random seed for simulate")->capture_default_str();
  app.add_option("--max-ledger", g.max_ledger, "exit 3 when the error ledger total exceeds this value");
  app.add_option("--threads", g.threads, "worker threads for overall and simulate")->capture_default_str();
  app.add_option("-o,--out", g.out_path, "write CSV here instead of stdout");
  app.fallthrough();

  std::function<std::string()> action;

  // tradeoff
  std::string s2, mu_s = "1";
  int folds = 1;
  auto* tr = app.add_subcommand("tradeoff", "trade-off curve knots of one or two releases");
  tr->add_option("--sigma2", s2, "noise variance parameter")->required();
  tr->add_option("--mu", mu_s, "integer mean shift (sensitivity)")->capture_default_str();
  tr->add_option("--folds", folds, "1 for a single release, 2 for the closed-form 2-fold composition")
      ->check(CLI::Range(1, 2))
      ->capture_default_str();
  tr->callback([&] {
    action = [&] {
      HPReal sigma2 = hp(s2);
      long mu = std::stol(mu_s);
      TradeoffCurve c = folds == 1 ? single_tradeoff(sigma2, mu) : twofold_knots(sigma2, mu);
      std::ostringstream os;
      os << "alpha,beta\n";
      for (const auto& k : c.knots()) os << to_sci(k.alpha) << ',' << to_sci(k.beta) << '\n';
      return os.str();
    };
  });

  // iid-eps
  long n = 0;
  std::string delta_s, eps_s;
  auto* ie = app.add_subcommand("iid-eps", "smallest eps with certified delta(eps) <= delta for n releases");
  ie->add_option("--n", n, "number of releases")->required()->check(CLI::PositiveNumber);
  ie->add_option("--sigma2", s2, "noise variance parameter")->required();
  ie->add_option("--delta", delta_s, "target delta")->required();
  ie->add_option("--mu", mu_s, "integer sensitivity")->capture_default_str();
  ie->callback([&] {
    action = [&] {
      auto r = eps_from_delta(IidCompositionSpec{n, hp(s2), std::stol(mu_s)}, hp(delta_s));
      check_ledger(g, r.at.ledger.total());
      KeyValue kv;
      kv.add("eps", r.eps);
      kv.add("delta", r.at.delta);
      kv.add("delta_upper", r.at.upper());
      kv.add("flagged", std::to_string(r.flagged || r.at.flagged));
      kv.raw(r.at.ledger.to_csv(false));
      return kv.str();
    };
  });

  // iid-sigma
  auto* is = app.add_subcommand("iid-sigma", "smallest sigma2 reaching (eps, delta) for n releases");
  is->add_option("--n", n, "number of releases")->required()->check(CLI::PositiveNumber);
  is->add_option("--eps", eps_s, "target eps")->required();
  is->add_option("--delta", delta_s, "target delta")->required();
  is->add_option("--mu", mu_s, "integer sensitivity")->capture_default_str();
  is->callback([&] {
    action = [&] {
      auto r = sigma_from_budget(n, hp(eps_s), hp(delta_s), std::stol(mu_s));
      check_ledger(g, r.at.ledger.total());
      KeyValue kv;
      kv.add("sigma2", r.sigma2);
      kv.add("delta", r.at.delta);
      kv.add("delta_upper", r.at.upper());
      kv.raw(r.at.ledger.to_csv(false));
      return kv.str();
    };
  });

  // curve
  std::string eps_list, eps_range, config_s, level_s;
  auto* cu = app.add_subcommand("curve", "delta(eps) of n releases next to its zCDP conversion");
  cu->add_option("--n", n, "number of releases")->check(CLI::PositiveNumber);
  cu->add_option("--sigma2", s2, "noise variance parameter");
  cu->add_option("--mu", mu_s, "integer sensitivity")->capture_default_str();
  cu->add_option("--config", config_s, "allocation file or preset name (with --level)");
  cu->add_option("--level", level_s, "level name inside --config");
  cu->add_option("--eps", eps_list, "comma-separated eps values");
  cu->add_option("--eps-range", eps_range, "lo:hi:count evenly spaced eps values");
  cu->callback([&] {
    action = [&] {
      IidCompositionSpec spec{n, HPReal(0), std::stol(mu_s)};
      if (!config_s.empty()) {
        if (level_s.empty()) throw SpecError("curve: --config needs --level");
        auto file = load_allocation_or_preset(config_s);
        bool found = false;
        for (const auto& lv : levels(file.config)) {
          if (lv.name != level_s) continue;
          spec.n = lv.n_queries;
          spec.sigma2 = lv.sigma2;
          found = true;
          break;
        }
        if (!found) throw SpecError("curve: no level named '" + level_s + "'");
      } else {
        if (n < 1 || s2.empty()) throw SpecError("curve: give --n and --sigma2, or --config and --level");
        spec.sigma2 = hp(s2);
      }
      return curve_csv(curve(spec, parse_eps_grid(eps_list, eps_range)));
    };
  });

  // residual
  auto* re = app.add_subcommand("residual", "certified pmf residual of the n-fold sum");
  re->add_option("--n", n, "number of releases")->required()->check(CLI::PositiveNumber);
  re->add_option("--sigma2", s2, "noise variance parameter")->required();
  re->callback([&] {
    action = [&] {
      auto r = residual_bound(n, hp(s2));
      check_ledger(g, r.r);
      KeyValue kv;
      kv.add("r", r.r);
      kv.add("omega1", r.omega1);
      kv.add("omega2", r.omega2);
      kv.add("omega3", r.omega3);
      kv.add("small_sigma", std::to_string(r.small_sigma));
      return kv.str();
    };
  });

  // overall
  auto* ov = app.add_subcommand("overall", "composition across all groups of an allocation");
  ov->add_option("--config", config_s, "allocation file or preset name")->required();
  auto* ov_eps = ov->add_option("--eps", eps_s, "evaluate delta at this eps");
  auto* ov_delta = ov->add_option("--delta", delta_s, "search the smallest eps reaching this delta");
  std::string t_max_s = "0.01";
  ov->add_option("--t-max", t_max_s, "upper end of the quadrature range, at most pi; 'pi' integrates the full period")
      ->capture_default_str();
  ov_eps->excludes(ov_delta);
  ov->callback([&] {
    action = [&] {
      auto file = load_allocation_or_preset(config_s);
      BooleQuadratureSpec quad = default_overall_quadrature(g.boole_n);
      if (t_max_s == "pi") {
        quad.b = hp_pi();
      } else {
        quad.b = hp(t_max_s);
        if (!(quad.b > 0) || quad.b > hp_pi()) throw SpecError("--t-max must lie in (0, pi]");
      }
      OverallResult r;
      KeyValue kv;
      if (!eps_s.empty()) {
        r = overall_delta(file.config, hp(eps_s), quad, g.threads);
      } else {
        HPReal target = delta_s.empty() ? file.delta_overall : hp(delta_s);
        auto s = overall_eps(file.config, target, quad, g.threads);
        r = s.at;
        kv.add("evaluations", std::to_string(s.evaluations));
      }
      check_ledger(g, r.ledger.total());
      kv.add("eps", r.eps);
      kv.add("delta_upper", r.delta_upper);
      kv.add("delta_two_sided", r.delta_two_sided);
      kv.add("P_t", r.P_t);
      kv.add("P_T", r.P_T);
      kv.add("first_term_error", r.first_term_error);
      kv.add("M6_t", r.M6_t);
      kv.add("M6_T", r.M6_T);
      kv.add("flagged", std::to_string(r.flagged));
      kv.raw(r.ledger.to_csv(false));
      return kv.str();
    };
  });

  // zcdp
  std::string rho_s;
  auto* zc = app.add_subcommand("zcdp", "eps of a zCDP budget at delta");
  zc->add_option("--rho", rho_s, "zCDP budget")->required();
  zc->add_option("--delta", delta_s, "target delta")->required();
  zc->callback([&] {
    action = [&] {
      KeyValue kv;
      kv.add("eps", eps_from_rho(hp(rho_s), hp(delta_s)));
      return kv.str();
    };
  });

  // simulate
  std::string counts_s;
  std::size_t synthetic = 0;
  std::int64_t synthetic_value = 0;
  int replicates = 1;
  auto* si = app.add_subcommand("simulate", "inject discrete Gaussian noise into counts and report MSE/MAE");
  auto* si_counts = si->add_option("--counts", counts_s, "CSV with one count per line");
  auto* si_syn = si->add_option("--synthetic", synthetic, "use N copies of --value instead of a file");
  si_counts->excludes(si_syn);
  si->add_option("--value", synthetic_value, "count for --synthetic")->capture_default_str();
  si->add_option("--sigma2", s2, "noise variance parameter")->required();
  si->add_option("--replicates", replicates, "Monte Carlo replicates")->check(CLI::PositiveNumber)->capture_default_str();
  si->callback([&] {
    action = [&] {
      CountsDataset data;
      if (!counts_s.empty())
        data = read_counts_csv(counts_s);
      else if (synthetic > 0)
        data = constant_dataset(synthetic, synthetic_value, "synthetic");
      else
        throw SpecError("simulate: give --counts or --synthetic");
      return sim_csv(simulate(data, hp(s2), g.seed, replicates, g.threads));
    };
  });

  // report
  auto* rp = app.add_subcommand("report", "per-level eps and noise comparison for an allocation");
  rp->add_option("--config", config_s, "allocation file or preset name")->required();
  rp->add_option("--delta", delta_s, "per-level delta (default from the file)");
  rp->callback([&] {
    action = [&] {
      auto file = load_allocation_or_preset(config_s);
      HPReal delta = delta_s.empty() ? file.delta_per_level : hp(delta_s);
      return level_report_csv(level_report(file.config, delta));
    };
  });

  try {
    // Precision must be fixed before any HPReal is parsed.
    set_precision(precision_from_env());
    app.parse(argc, argv);
    if (g.precision != 0) set_precision(g.precision);
    std::string text = action();
    if (g.out_path.empty()) {
      out << text;
    } else {
      std::ofstream f(g.out_path);
      if (!f) throw SpecError("cannot write " + g.out_path);
      f << text;
    }
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalid;
  } catch (const LedgerViolation& e) {
    err << "error: " << e.what() << '\n';
    return kExitLedger;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace dpacct::cli
