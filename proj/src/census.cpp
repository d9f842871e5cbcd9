#include "dpacct/census.h"

#include "dpacct/tradeoff.h"
#include "dpacct/zcdp.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dpacct {

namespace {

#include "presets.inc"

std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

struct Reader {
  std::string source;
  int line = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(source, line, msg); }

  HPReal real(const std::string& key, const std::string& v) const {
    try {
      return hp(v);
    } catch (const SpecError&) {
      fail(key + ": expected a number, got '" + v + "'");
    }
  }

  long integer(const std::string& key, const std::string& v) const {
    long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) fail(key + ": expected an integer, got '" + v + "'");
    return out;
  }
};

}  // namespace

ParseError::ParseError(const std::string& source, int line, const std::string& message)
    : SpecError(source + ":" + std::to_string(line) + ": " + message), line_(line) {}

AllocationFile parse_allocation(const std::string& text, const std::string& source) {
  static const std::set<std::string> known = {"schema_version", "name",          "rho",          "n_ref",
                                              "lattice_scale",  "delta_per_level", "delta_overall"};
  AllocationFile file;
  Reader rd{source};
  std::map<std::string, int> seen;
  std::vector<int> group_lines;
  int groups_line = 0;
  bool in_groups = false;

  std::istringstream in(text);
  std::string raw;
  while (std::getline(in, raw)) {
    ++rd.line;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[groups]") rd.fail("unknown section " + line);
      if (in_groups) rd.fail("duplicate [groups] section");
      in_groups = true;
      groups_line = rd.line;
      continue;
    }
    if (!in_groups) {
      auto eq = line.find('=');
      if (eq == std::string::npos) rd.fail("expected 'key = value'");
      std::string key = trim(line.substr(0, eq));
      std::string value = trim(line.substr(eq + 1));
      if (!known.count(key)) rd.fail("unknown key '" + key + "'");
      if (seen.count(key)) rd.fail("duplicate key '" + key + "'");
      if (value.empty()) rd.fail(key + ": empty value");
      seen[key] = rd.line;
      if (key == "schema_version") {
        file.schema_version = static_cast<int>(rd.integer(key, value));
        if (file.schema_version != 1) rd.fail("unsupported schema_version " + value);
      } else if (key == "name") {
        file.name = value;
      } else if (key == "rho") {
        file.config.rho = rd.real(key, value);
        if (!(file.config.rho > 0)) rd.fail("rho must be positive");
      } else if (key == "n_ref") {
        file.config.n_ref = rd.integer(key, value);
        if (file.config.n_ref < 1) rd.fail("n_ref must be positive");
      } else if (key == "lattice_scale") {
        file.config.L = rd.integer(key, value);
        if (file.config.L < 1) rd.fail("lattice_scale must be positive");
      } else {
        HPReal d = rd.real(key, value);
        if (!(d > 0) || !(d < 1)) rd.fail(key + " must lie in (0,1)");
        (key == "delta_per_level" ? file.delta_per_level : file.delta_overall) = d;
      }
      continue;
    }
    auto fields = split(line, '|');
    if (fields.size() < 3 || fields.size() > 4) rd.fail("group row needs 'name | a | n_folds [| levels]'");
    AllocationGroup g;
    g.name = fields[0];
    if (g.name.empty()) rd.fail("group name is empty");
    for (const auto& other : file.config.groups)
      if (other.name == g.name) rd.fail("duplicate group '" + g.name + "'");
    g.a = rd.real("a", fields[1]);
    g.n_folds = rd.integer("n_folds", fields[2]);
    if (fields.size() == 4) {
      for (const auto& lv : split(fields[3], ','))
        if (!lv.empty()) g.levels.push_back(lv);
    }
    file.config.groups.push_back(std::move(g));
    group_lines.push_back(rd.line);
  }

  rd.line = 0;
  if (!seen.count("schema_version")) rd.fail("missing schema_version");
  if (!seen.count("rho")) rd.fail("missing rho");
  if (!in_groups || file.config.groups.empty()) rd.fail("missing [groups] table");
  if (file.name.empty()) file.name = std::filesystem::path(source).stem().string();

  const HPReal tol("1e-12");
  for (std::size_t i = 0; i < file.config.groups.size(); ++i) {
    const auto& g = file.config.groups[i];
    rd.line = group_lines[i];
    if (!(g.a > 0) || !(g.a < 1)) rd.fail("group '" + g.name + "': a must lie in (0,1)");
    if (g.n_folds < 1) rd.fail("group '" + g.name + "': n_folds must be at least 1");
    HPReal aL = g.a * file.config.L;
    if (abs(aL - round(aL)) > tol)
      rd.fail("group '" + g.name + "': a * lattice_scale = " + aL.str(12) + " is not an integer");
    if (!g.levels.empty() && g.n_folds % static_cast<long>(g.levels.size()) != 0)
      rd.fail("group '" + g.name + "': n_folds not divisible by the number of levels");
  }
  rd.line = groups_line;
  HPReal n_eff = file.config.n_eff();
  if (abs(n_eff - file.config.n_ref) > tol)
    rd.fail("sum of a * n_folds is " + n_eff.str(15) + ", expected n_ref = " + std::to_string(file.config.n_ref));
  return file;
}

AllocationFile load_allocation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open allocation file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_allocation(ss.str(), path);
}

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.push_back(p.name);
  return out;
}

std::string preset_text(const std::string& name) {
  for (const auto& p : kPresets)
    if (name == p.name) return p.text;
  throw SpecError("unknown preset '" + name + "'");
}

AllocationFile load_preset(const std::string& name) { return parse_allocation(preset_text(name), name); }

AllocationFile load_allocation_or_preset(const std::string& path_or_name) {
  if (std::filesystem::exists(path_or_name)) return load_allocation(path_or_name);
  return load_preset(path_or_name);
}

std::vector<Level> levels(const AllocationConfig& config) {
  auto sigma2 = sigmas_from_allocation(config);
  std::vector<Level> out;
  for (std::size_t i = 0; i < config.groups.size(); ++i) {
    const auto& g = config.groups[i];
    if (g.levels.empty()) {
      out.push_back(Level{g.name, i, g.n_folds, sigma2[i]});
      continue;
    }
    long per = g.n_folds / static_cast<long>(g.levels.size());
    for (const auto& name : g.levels) out.push_back(Level{name, i, per, sigma2[i]});
  }
  return out;
}

std::vector<LevelRow> level_report(const AllocationConfig& config, const HPReal& delta) {
  if (!(delta > 0) || !(delta < 1)) throw DomainError("level_report: delta must lie in (0,1)");
  std::vector<LevelRow> rows;
  // Levels sharing a group row and fold count have identical results.
  std::map<std::pair<std::size_t, long>, LevelRow> cache;
  for (const auto& lv : levels(config)) {
    auto key = std::make_pair(lv.group, lv.n_queries);
    auto it = cache.find(key);
    if (it == cache.end()) {
      LevelRow row;
      row.sigma2_bureau = lv.sigma2;
      row.eps_zcdp = eps_from_rho(HPReal(lv.n_queries) / (2 * lv.sigma2), delta);
      row.eps_fdp = eps_from_delta(IidCompositionSpec{lv.n_queries, lv.sigma2, 1}, delta).eps;
      row.reduction_pct = 100 * (1 - row.eps_fdp / row.eps_zcdp);
      row.sigma2_ours = sigma_from_budget(lv.n_queries, row.eps_zcdp, delta).sigma2;
      row.var_reduction_pct = 100 * (1 - row.sigma2_ours / row.sigma2_bureau);
      it = cache.emplace(key, row).first;
    }
    LevelRow row = it->second;
    row.level = lv.name;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string level_report_csv(const std::vector<LevelRow>& rows) {
  std::ostringstream out;
  out << "level,sigma2_bureau,eps_zcdp,eps_fdp,reduction_pct,sigma2_ours,var_reduction_pct\n";
  for (const auto& r : rows)
    out << csv_field(r.level) << ',' << to_sci(r.sigma2_bureau) << ',' << to_sci(r.eps_zcdp) << ','
        << to_sci(r.eps_fdp) << ',' << to_sci(r.reduction_pct) << ',' << to_sci(r.sigma2_ours) << ','
        << to_sci(r.var_reduction_pct) << '\n';
  return out.str();
}

std::vector<CurveRow> curve(const IidCompositionSpec& spec, const std::vector<HPReal>& eps_grid) {
  if (eps_grid.empty()) throw DomainError("curve: empty eps grid");
  IidAccountant acct(spec);
  HPReal mu(spec.mu);
  HPReal rho = mu * mu * spec.n / (2 * spec.sigma2);
  std::vector<CurveRow> rows;
  for (const auto& eps : eps_grid) {
    IidDelta d = acct.delta_eps(eps);
    rows.push_back(CurveRow{eps, clamp01(d.upper()), delta_from_rho(rho, eps)});
  }
  return rows;
}

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::ostringstream out;
  out << "eps,delta_fdp,delta_zcdp\n";
  for (const auto& r : rows) out << to_sci(r.eps) << ',' << to_sci(r.delta_fdp) << ',' << to_sci(r.delta_zcdp) << '\n';
  return out.str();
}

}  // namespace dpacct
