#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "atb/tree.hpp"

namespace atb {

// One trajectory row. The CSV schema is bit-exact:
// t,box,arm,reward,mu_xt,inst_regret,cum_regret,radius_bt
// with floats printed to 17 significant digits.
struct StepRow {
  std::uint64_t t = 0;
  std::string box;
  ArmPoint arm;
  double reward = 0.0;
  double mu_xt = 0.0;
  double inst_regret = 0.0;
  double cum_regret = 0.0;
  double radius_bt = 0.0;
};

struct RunRecord {
  std::vector<StepRow> rows;
  std::uint64_t horizon = 0;
  ArmPoint recommendation;
  std::uint64_t t_star = 0;
  std::uint64_t activations = 0;
  std::uint64_t splits = 0;
  double total_seconds = 0.0;

  double final_cum_regret() const { return rows.empty() ? 0.0 : rows.back().cum_regret; }
  double avg_step_seconds() const {
    return rows.empty() ? 0.0 : total_seconds / static_cast<double>(rows.size());
  }

  void write_csv(std::ostream& os) const;
  static RunRecord read_csv(std::istream& is);
};

}  // namespace atb
