#include "atb/run_record.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "atb/error.hpp"

namespace atb {

namespace {

const char* kHeader = "t,box,arm,reward,mu_xt,inst_regret,cum_regret,radius_bt";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string part;
  std::stringstream ss(line);
  while (std::getline(ss, part, ',')) out.push_back(part);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

void RunRecord::write_csv(std::ostream& os) const {
  os << kHeader << '\n';
  for (const StepRow& r : rows) {
    os << r.t << ',' << r.box << ',' << r.arm.to_string() << ',' << fmt(r.reward) << ','
       << fmt(r.mu_xt) << ',' << fmt(r.inst_regret) << ',' << fmt(r.cum_regret) << ','
       << fmt(r.radius_bt) << '\n';
  }
}

RunRecord RunRecord::read_csv(std::istream& is) {
  RunRecord rec;
  std::string line;
  if (!std::getline(is, line) || line != kHeader)
    throw ConfigError("unrecognised trajectory CSV header");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 8) throw ConfigError("malformed trajectory row: '" + line + "'");
    StepRow r;
    r.t = std::stoull(f[0]);
    r.box = f[1];
    r.arm = ArmPoint::from_string(f[2]);
    r.reward = std::stod(f[3]);
    r.mu_xt = std::stod(f[4]);
    r.inst_regret = std::stod(f[5]);
    r.cum_regret = std::stod(f[6]);
    r.radius_bt = std::stod(f[7]);
    rec.rows.push_back(std::move(r));
  }
  rec.horizon = rec.rows.size();
  return rec;
}

}  // namespace atb
