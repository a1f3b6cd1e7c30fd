#include "mcmpc/trace_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mcmpc {

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17e", v);
    out += buf;
}

}  // namespace

std::string trace_csv(const SimTrace& trace) {
    const Eigen::Index nj = trace.records.empty() ? 0 : trace.records.front().arm_angles.size();
    std::string out = "t,c_x,c_y,c_z,cd_x,cd_y,cd_z,cdd_x,cdd_y,cdd_z,zmp_x,zmp_y,"
                      "zmp_lb_x,zmp_ub_x,zmp_lb_y,zmp_ub_y,dz_x,dz_y,fc_x,fc_y,fc_z,contact_id";
    for (Eigen::Index j = 0; j < nj; ++j) out += ",q_" + std::to_string(j + 1);
    out += "\n";
    for (const auto& r : trace.records) {
        const double cols[] = {r.time,       r.com(0),       r.com(1),       r.com(2),
                               r.com_vel(0), r.com_vel(1),   r.com_vel(2),   r.com_acc(0),
                               r.com_acc(1), r.com_acc(2),   r.zmp(0),       r.zmp(1),
                               r.zmp_lower(0), r.zmp_upper(0), r.zmp_lower(1), r.zmp_upper(1),
                               r.delta(0),   r.delta(1),     r.force(0),     r.force(1),
                               r.force(2)};
        for (double v : cols) {
            append_number(out, v);
            out += ',';
        }
        out += r.contact_id;
        for (Eigen::Index j = 0; j < nj; ++j) {
            out += ',';
            append_number(out, r.arm_angles(j));
        }
        out += "\n";
    }
    return out;
}

void write_trace(const SimTrace& trace, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw StructuralError("cannot open trace output file: " + path);
    f << trace_csv(trace);
}

TraceTable read_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw StructuralError("cannot open trace file: " + path);
    TraceTable table;
    std::string line;
    if (!std::getline(f, line)) throw StructuralError("trace file is empty: " + path);
    std::stringstream hs(line);
    std::string cell;
    int id_col = -1;
    while (std::getline(hs, cell, ',')) {
        if (cell == "contact_id") id_col = static_cast<int>(table.header.size());
        table.header.push_back(cell);
    }
    if (id_col < 0) throw StructuralError("trace file has no contact_id column: " + path);
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::vector<double> row;
        int col = 0;
        while (std::getline(ls, cell, ',')) {
            if (col == id_col)
                table.contact_ids.push_back(cell);
            else
                row.push_back(std::stod(cell));
            ++col;
        }
        // a trailing empty contact_id drops the final cell on some parsers
        while (col++ < static_cast<int>(table.header.size())) {
            if (col - 1 == id_col)
                table.contact_ids.push_back("");
            else
                row.push_back(0.0);
        }
        table.numeric.push_back(std::move(row));
    }
    return table;
}

std::string report_json(const std::string& scenario_name, const SimTrace& trace,
                        const VerifyReport& report) {
    nlohmann::json doc;
    doc["scenario"] = scenario_name;
    doc["cycles"] = trace.records.size();
    nlohmann::json events = nlohmann::json::array();
    for (const auto& e : trace.events)
        events.push_back({{"t", e.time}, {"id", e.id}, {"engaged", e.engaged}});
    doc["contact_events"] = std::move(events);
    doc["verification"] = {{"zmp_violation", report.zmp_violation},
                           {"friction_violation", report.friction_violation},
                           {"vertical_band_violation", report.vertical_band_violation},
                           {"horizontal_band_violation", report.horizontal_band_violation},
                           {"joint_limit_violation", report.joint_limit_violation},
                           {"identity_error", report.identity_error}};
    doc["pass"] = report.pass();
    return doc.dump(2) + "\n";
}

void write_report(const std::string& scenario_name, const SimTrace& trace,
                  const VerifyReport& report, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw StructuralError("cannot open report output file: " + path);
    f << report_json(scenario_name, trace, report);
}

}  // namespace mcmpc
