#pragma once

#include "dpacct/hp_numeric.h"
#include "dpacct/iid_accountant.h"
#include "dpacct/inid_accountant.h"

#include <stdexcept>
#include <string>
#include <vector>

namespace dpacct {

// Raised for malformed allocation files; what() carries "source:line: message".
class ParseError : public SpecError {
 public:
  ParseError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

// An allocation file: header keys plus the [groups] table.
struct AllocationFile {
  int schema_version = 1;
  std::string name;
  AllocationConfig config;
  HPReal delta_per_level = HPReal("1e-11");
  HPReal delta_overall = HPReal("1e-10");
};

AllocationFile parse_allocation(const std::string& text, const std::string& source = "<string>");
AllocationFile load_allocation(const std::string& path);

// Bundled presets by name; the text is compiled in so no data path is needed.
std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);
AllocationFile load_preset(const std::string& name);
// Path if the argument names an existing file, otherwise a preset name.
AllocationFile load_allocation_or_preset(const std::string& path_or_name);

// One reporting level; a group row with several levels splits its folds evenly.
struct Level {
  std::string name;
  std::size_t group = 0;
  long n_queries = 0;
  HPReal sigma2;
};
std::vector<Level> levels(const AllocationConfig& config);

struct LevelRow {
  std::string level;
  HPReal sigma2_bureau;
  HPReal eps_zcdp;
  HPReal eps_fdp;
  HPReal reduction_pct;  // 100 (1 - eps_fdp / eps_zcdp)
  HPReal sigma2_ours;    // smallest sigma2 reaching (eps_zcdp, delta)
  HPReal var_reduction_pct;
};
std::vector<LevelRow> level_report(const AllocationConfig& config, const HPReal& delta);
std::string level_report_csv(const std::vector<LevelRow>& rows);

struct CurveRow {
  HPReal eps;
  HPReal delta_fdp;   // certified i.i.d. upper bound, clamped to [0,1]
  HPReal delta_zcdp;  // zCDP conversion at rho = n / (2 sigma2)
};
std::vector<CurveRow> curve(const IidCompositionSpec& spec, const std::vector<HPReal>& eps_grid);
std::string curve_csv(const std::vector<CurveRow>& rows);

}  // namespace dpacct
