#pragma once

#include "dpacct/hp_numeric.h"

#include <string>
#include <vector>

namespace dpacct {

// Named nonnegative error terms; total() is their sum.
class ErrorLedger {
 public:
  struct Term {
    std::string name;
    HPReal value;
    HPReal weight;
    std::string weight_label;
  };

  void add(const std::string& name, const HPReal& value);
  // Term entering the total as weight * value (e.g. the e^eps factor on a subtracted tail).
  void add_weighted(const std::string& name, const HPReal& value, const HPReal& weight,
                    const std::string& weight_label);
  const std::vector<Term>& terms() const { return terms_; }
  HPReal total() const;
  // Raw (unweighted) value of a term.
  HPReal get(const std::string& name) const;
  bool has(const std::string& name) const;

  // "term,value" rows of weighted contributions, 30-digit scientific notation.
  std::string to_csv(bool header = true) const;

 private:
  std::vector<Term> terms_;
};

}  // namespace dpacct
