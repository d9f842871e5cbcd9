#include "dpacct/zcdp.h"

namespace dpacct {

ZcdpBudget rho_of_dgm(const HPReal& sigma2, const HPReal& sensitivity) {
  if (!(sigma2 > 0)) throw DomainError("rho_of_dgm: sigma2 must be positive");
  return ZcdpBudget{sensitivity * sensitivity / (2 * sigma2)};
}

HPReal eps_from_rho(const HPReal& rho, const HPReal& delta) {
  if (rho < 0) throw DomainError("eps_from_rho: rho must be nonnegative");
  if (!(delta > 0) || !(delta < 1)) throw DomainError("eps_from_rho: delta must lie in (0,1)");
  return rho + 2 * sqrt(-rho * log(delta));
}

HPReal delta_from_rho(const HPReal& rho, const HPReal& eps) {
  if (!(rho > 0)) throw DomainError("delta_from_rho: rho must be positive");
  if (eps <= rho) return HPReal(1);
  HPReal d = eps - rho;
  return exp(-d * d / (4 * rho));
}

ZcdpBudget compose(const std::vector<ZcdpBudget>& budgets) {
  HPReal total = 0;
  for (const auto& b : budgets) {
    if (b.rho < 0) throw DomainError("compose: negative rho");
    total += b.rho;
  }
  return ZcdpBudget{total};
}

}  // namespace dpacct
