#include <atomic>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "mcmpc/scenario.hpp"
#include "mcmpc/trace_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerification = 3;

struct PlanOptions {
    std::vector<std::string> scenario_paths;
    std::string out_path;
    std::string report_path;
    int horizon = 0;     // 0 = keep the scenario's value
    double dt = 0.0;     // 0 = keep the scenario's value
    unsigned seed = 0;
    int jobs = 1;
    bool centering = false;
};

// Runs one scenario end to end; returns the exit code for this scenario.
int run_one(const std::string& path, const PlanOptions& opt, bool batch, std::mutex& io_mutex) {
    namespace fs = std::filesystem;
    mcmpc::Scenario scenario;
    try {
        scenario = mcmpc::parse_scenario(path);
    } catch (const std::exception& e) {
        std::scoped_lock lock(io_mutex);
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    }
    if (opt.horizon > 0) scenario.horizon.steps = opt.horizon;
    if (opt.dt > 0.0) scenario.horizon.dt = opt.dt;

    mcmpc::CycleConfig config = mcmpc::config_from_scenario(scenario);
    config.seed = opt.seed;
    config.centering = opt.centering;

    const auto target = [&](const std::string& base, const std::string& ext) -> std::string {
        if (base.empty()) return {};
        if (!batch) return base;
        fs::create_directories(base);
        return (fs::path(base) / (scenario.name + ext)).string();
    };
    const std::string out_file = target(opt.out_path, ".csv");
    const std::string report_file = target(opt.report_path, ".json");

    mcmpc::SimTrace trace;
    try {
        mcmpc::run_scenario_into(scenario, config, trace);
    } catch (const std::exception& e) {
        std::scoped_lock lock(io_mutex);
        std::cerr << scenario.name << ": planning failed: " << e.what() << "\n";
        if (!out_file.empty()) mcmpc::write_trace(trace, out_file);  // partial trace
        return kExitInfeasible;
    }

    const mcmpc::VerifyReport report = mcmpc::verify_trace(trace, scenario);
    if (!out_file.empty()) mcmpc::write_trace(trace, out_file);
    if (!report_file.empty()) mcmpc::write_report(scenario.name, trace, report, report_file);

    std::scoped_lock lock(io_mutex);
    if (!report.pass()) {
        std::cerr << scenario.name << ": verification failed\n";
        return kExitVerification;
    }
    std::cout << scenario.name << ": ok (" << trace.records.size() << " cycles, "
              << trace.events.size() << " contact events)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"three-stage contact-aware motion planner"};
    app.require_subcommand(1);

    PlanOptions opt;
    CLI::App* plan = app.add_subcommand("plan", "plan a scenario and verify the trace");
    plan->add_option("--scenario", opt.scenario_paths, "scenario JSON file (repeatable)")
        ->required();
    plan->add_option("--out", opt.out_path, "trace CSV path (directory in batch mode)");
    plan->add_option("--report", opt.report_path, "report JSON path (directory in batch mode)");
    plan->add_option("--horizon", opt.horizon, "override preview steps");
    plan->add_option("--dt", opt.dt, "override preview sample time [s]");
    plan->add_option("--seed", opt.seed, "disturbance jitter seed");
    plan->add_option("--jobs", opt.jobs, "concurrent scenarios in batch mode")
        ->check(CLI::PositiveNumber);
    plan->add_flag("--centering", opt.centering, "enable the vertical band-centering objective");

    CLI11_PARSE(app, argc, argv);

    const bool batch = opt.scenario_paths.size() > 1;
    std::mutex io_mutex;
    std::atomic<int> worst{kExitOk};
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < opt.scenario_paths.size();
             i = next.fetch_add(1)) {
            const int code = run_one(opt.scenario_paths[i], opt, batch, io_mutex);
            int cur = worst.load();
            while (code > cur && !worst.compare_exchange_weak(cur, code)) {
            }
        }
    };
    const int nthreads = std::min<int>(opt.jobs, static_cast<int>(opt.scenario_paths.size()));
    if (nthreads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return worst.load();
}
