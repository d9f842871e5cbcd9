#pragma once

#include "dpacct/hp_numeric.h"

#include <vector>

namespace dpacct {

struct ZcdpBudget {
  HPReal rho;
};

// rho = Delta^2 / (2 sigma2) for one discrete Gaussian release.
ZcdpBudget rho_of_dgm(const HPReal& sigma2, const HPReal& sensitivity = HPReal(1));

// eps = rho + 2 sqrt(-rho ln delta).
HPReal eps_from_rho(const HPReal& rho, const HPReal& delta);
// Inverse in delta: e^{-(eps - rho)^2 / (4 rho)} for eps >= rho, else 1.
HPReal delta_from_rho(const HPReal& rho, const HPReal& eps);

// zCDP composes additively.
ZcdpBudget compose(const std::vector<ZcdpBudget>& budgets);

}  // namespace dpacct
