#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "filtlab/apps.hpp"
#include "filtlab/verify.hpp"

namespace filtlab {

// Flat experiment configuration: one JSON object or a handful of CLI flags.
// n_paths / n_steps are optional so that the suite can keep per-experiment
// pinned budgets unless the user overrides them globally.
struct ExperimentConfig {
    std::string experiment = "suite";
    std::uint64_t seed = 7;
    std::optional<std::size_t> n_paths;
    std::optional<std::size_t> n_steps;
    std::string refinement = "uniform";  // "uniform" | "geometric"
    double geometric_ratio = 0.5;
    double horizon = 0.0;  // 0 -> experiment default
    double rate = 0.0;     // lambda; 0 -> experiment default
    long long jump_index = 3;
    double mu = 0.0;
    double vol = 1.0;
    double barrier = 0.0;     // 0 -> e^{-1}
    double firm_value = 1.0;  // V_0
    std::vector<double> sigma_breaks;  // interior breakpoints of the schedule
    std::vector<double> sigma_levels;
    double v0 = -1.0;  // signal variance at 0; <0 -> bridge-implied
    std::vector<double> thetas = {0.5, 1.0};
    std::string drift_variant = "g4-consistent";
    std::vector<std::pair<double, double>> pairs;  // empty -> defaults
    double threshold = 4.0;
    double drift_clip = 1e4;
    unsigned workers = 0;
    std::string output_dir;

    void validate() const;  // invalid_argument naming the offending field

    nlohmann::json echo() const;
    static ExperimentConfig from_json(const nlohmann::json& j);
};

const std::vector<std::string>& experiment_names();

struct ExperimentResult {
    std::vector<TestReport> reports;
    std::map<std::string, std::vector<CurvePoint>> curves;

    // Overall verdict: every plain test passed and every negative control failed.
    bool ok() const {
        for (const auto& r : reports)
            if (!r.as_expected()) return false;
        return true;
    }
};

ExperimentResult run_experiment(const ExperimentConfig& config);

// Serialization of reports and result files (schema used by the CLI).
nlohmann::json report_to_json(const TestReport& report);
nlohmann::json result_to_json(const ExperimentConfig& config,
                              const ExperimentResult& result,
                              double wallclock_seconds);
std::string reports_to_csv(const std::vector<TestReport>& reports);
std::string curve_to_csv(const std::vector<CurvePoint>& curve);

// Writes report.json plus one CSV per table into output_dir; returns the
// report.json path.
std::string write_report_files(const ExperimentConfig& config,
                               const ExperimentResult& result,
                               double wallclock_seconds);

inline const char* kVersion = "0.1.0";

}  // namespace filtlab
