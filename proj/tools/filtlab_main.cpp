#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "filtlab/experiments.hpp"

namespace {

using filtlab::ExperimentConfig;
using filtlab::ExperimentResult;
using filtlab::TestReport;

std::vector<std::pair<double, double>> parse_pairs(const std::string& text) {
    // "0.25:0.5,0.25:0.75" -> {(0.25,0.5), (0.25,0.75)}
    std::vector<std::pair<double, double>> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos
                                                      ? std::string::npos
                                                      : comma - pos);
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw std::invalid_argument("pairs: expected s:t entries");
        out.emplace_back(std::stod(item.substr(0, colon)),
                         std::stod(item.substr(colon + 1)));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void print_verdicts(const ExperimentResult& result) {
    for (const auto& r : result.reports) {
        const bool ok = r.as_expected();
        std::string note;
        if (r.negative_control)
            note = r.pass ? " (control unexpectedly passed)"
                          : " (control failed as required)";
        std::printf("[%s] %s  statistic=%.6g stderr=%.3g z=%.3g threshold=%.4g%s\n",
                    ok ? "PASS" : "FAIL", r.name.c_str(), r.statistic, r.stderr_,
                    r.z, r.threshold, note.c_str());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo laboratory for enlarged-filtration decompositions"};
    app.require_subcommand(1);

    CLI::App* run = app.add_subcommand(
        "run", "run a named experiment and write report.json / CSV tables");

    std::string config_path, experiment, refinement, drift_variant, pairs_text,
        output_dir;
    std::uint64_t seed = 0;
    std::size_t n_paths = 0, n_steps = 0;
    long long jump_index = 0;
    double geometric_ratio = 0, horizon = 0, rate = 0, mu = 0, vol = 0, barrier = 0,
           firm_value = 0, v0 = 0, threshold = 0, drift_clip = 0;
    unsigned workers = 0;
    std::vector<double> sigma_breaks, sigma_levels, thetas;

    run->add_option("--config", config_path, "JSON config file (flags win)");
    run->add_option("--experiment", experiment, "experiment name");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--n-paths", n_paths, "Monte Carlo paths");
    run->add_option("--n-steps", n_steps, "time steps of the base grid");
    run->add_option("--refinement", refinement, "uniform | geometric");
    run->add_option("--geometric-ratio", geometric_ratio, "step ratio in (0,1)");
    run->add_option("--horizon", horizon, "time horizon T");
    run->add_option("--rate", rate, "Poisson intensity lambda");
    run->add_option("--jump-index", jump_index, "n for the nth-jump experiment");
    run->add_option("--mu", mu, "structural log-value drift");
    run->add_option("--vol", vol, "structural log-value volatility");
    run->add_option("--barrier", barrier, "default barrier K");
    run->add_option("--firm-value", firm_value, "initial firm value V_0");
    run->add_option("--sigma-breaks", sigma_breaks, "interior schedule breakpoints")
        ->delimiter(',');
    run->add_option("--sigma-levels", sigma_levels, "signal volatility levels")
        ->delimiter(',');
    run->add_option("--v0", v0, "initial signal variance");
    run->add_option("--theta", thetas, "CF test angles")->delimiter(',');
    run->add_option("--drift-variant", drift_variant, "g4-consistent | as-printed");
    run->add_option("--pairs", pairs_text, "test pairs, e.g. 0.25:0.5,0.5:0.75");
    run->add_option("--threshold", threshold, "z threshold (default 4)");
    run->add_option("--drift-clip", drift_clip, "per-step drift clamp");
    run->add_option("--workers", workers, "worker threads (0 = hardware)");
    run->add_option("--output-dir", output_dir,
                    "report directory (default $FILTLAB_OUTPUT_DIR or '.')");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    ExperimentConfig cfg;
    try {
        if (run->count("--config")) {
            std::ifstream f(config_path);
            if (!f) {
                std::fprintf(stderr, "error: cannot open config '%s'\n",
                             config_path.c_str());
                return 2;
            }
            nlohmann::json j;
            f >> j;
            cfg = ExperimentConfig::from_json(j);
        }
        if (run->count("--experiment")) cfg.experiment = experiment;
        if (run->count("--seed")) cfg.seed = seed;
        if (run->count("--n-paths")) cfg.n_paths = n_paths;
        if (run->count("--n-steps")) cfg.n_steps = n_steps;
        if (run->count("--refinement")) cfg.refinement = refinement;
        if (run->count("--geometric-ratio")) cfg.geometric_ratio = geometric_ratio;
        if (run->count("--horizon")) cfg.horizon = horizon;
        if (run->count("--rate")) cfg.rate = rate;
        if (run->count("--jump-index")) cfg.jump_index = jump_index;
        if (run->count("--mu")) cfg.mu = mu;
        if (run->count("--vol")) cfg.vol = vol;
        if (run->count("--barrier")) cfg.barrier = barrier;
        if (run->count("--firm-value")) cfg.firm_value = firm_value;
        if (run->count("--sigma-breaks")) cfg.sigma_breaks = sigma_breaks;
        if (run->count("--sigma-levels")) cfg.sigma_levels = sigma_levels;
        if (run->count("--v0")) cfg.v0 = v0;
        if (run->count("--theta")) cfg.thetas = thetas;
        if (run->count("--drift-variant")) cfg.drift_variant = drift_variant;
        if (run->count("--pairs")) cfg.pairs = parse_pairs(pairs_text);
        if (run->count("--threshold")) cfg.threshold = threshold;
        if (run->count("--drift-clip")) cfg.drift_clip = drift_clip;
        if (run->count("--workers")) cfg.workers = workers;
        if (run->count("--output-dir")) cfg.output_dir = output_dir;
        if (cfg.output_dir.empty()) {
            if (const char* env = std::getenv("FILTLAB_OUTPUT_DIR"))
                cfg.output_dir = env;
        }
        cfg.validate();
    } catch (const nlohmann::json::exception& e) {
        std::fprintf(stderr, "error: config does not parse: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }

    try {
        const auto started = std::chrono::steady_clock::now();
        const ExperimentResult result = filtlab::run_experiment(cfg);
        const double wallclock =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
                .count();
        print_verdicts(result);
        const std::string report = filtlab::write_report_files(cfg, result, wallclock);

        std::size_t bad = 0;
        for (const auto& r : result.reports)
            if (!r.as_expected()) ++bad;
        std::printf("%s: %zu checks, %zu out of order; report written to %s\n",
                    cfg.experiment.c_str(), result.reports.size(), bad,
                    report.c_str());
        return bad == 0 ? 0 : 1;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
