#pragma once

#include <string>
#include <vector>

#include "mcmpc/mpc_loop.hpp"

namespace mcmpc {

/// One row per cycle:
///   t, c_*, cd_*, cdd_* (CoM position/velocity/acceleration),
///   zmp_*, zmp_lb_*/zmp_ub_* (bounds used that cycle), dz_* (realized shift),
///   fc_* (contact force), contact_id, q_1..q_n (arm angles).
std::string trace_csv(const SimTrace& trace);
void write_trace(const SimTrace& trace, const std::string& path);

/// Parsed CSV as raw columns, for audits of written files.
struct TraceTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> numeric;  // per row, all columns but contact_id
    std::vector<std::string> contact_ids;
};

TraceTable read_trace(const std::string& path);

/// JSON run report: verification maxima, contact events, pass flag.
std::string report_json(const std::string& scenario_name, const SimTrace& trace,
                        const VerifyReport& report);
void write_report(const std::string& scenario_name, const SimTrace& trace,
                  const VerifyReport& report, const std::string& path);

}  // namespace mcmpc
