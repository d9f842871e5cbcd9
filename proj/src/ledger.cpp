#include "dpacct/ledger.h"

#include <sstream>

namespace dpacct {

void ErrorLedger::add(const std::string& name, const HPReal& value) {
  add_weighted(name, value, HPReal(1), "");
}

void ErrorLedger::add_weighted(const std::string& name, const HPReal& value, const HPReal& weight,
                               const std::string& weight_label) {
  if (value < 0 || weight < 0) throw DomainError("ledger term " + name + " is negative");
  if (has(name)) throw SpecError("duplicate ledger term " + name);
  terms_.push_back(Term{name, value, weight, weight_label});
}

HPReal ErrorLedger::total() const {
  HPReal s = 0;
  for (const auto& t : terms_) s += t.weight * t.value;
  return s;
}

HPReal ErrorLedger::get(const std::string& name) const {
  for (const auto& t : terms_)
    if (t.name == name) return t.value;
  throw SpecError("no ledger term " + name);
}

bool ErrorLedger::has(const std::string& name) const {
  for (const auto& t : terms_)
    if (t.name == name) return true;
  return false;
}

std::string ErrorLedger::to_csv(bool header) const {
  std::ostringstream os;
  if (header) os << "term,value\n";
  for (const auto& t : terms_) {
    os << t.name;
    if (!t.weight_label.empty()) os << '*' << t.weight_label;
    os << ',' << to_sci(t.weight * t.value) << '\n';
  }
  os << "total," << to_sci(total()) << '\n';
  return os.str();
}

}  // namespace dpacct
