// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line. Budgets are pinned here; the same experiments back the CLI's `suite`.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "filtlab/experiments.hpp"

using namespace filtlab;

namespace {

struct Timed {
    ExperimentResult result;
    double seconds = 0.0;
};

Timed run_timed(const ExperimentConfig& cfg) {
    const auto start = std::chrono::steady_clock::now();
    Timed out;
    out.result = run_experiment(cfg);
    out.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    return out;
}

bool prefixed_ok(const ExperimentResult& r, const std::string& prefix,
                 std::size_t* count = nullptr) {
    bool ok = true;
    std::size_t seen = 0;
    for (const auto& rep : r.reports) {
        if (rep.name.rfind(prefix, 0) != 0) continue;
        ++seen;
        if (!rep.as_expected()) {
            ok = false;
            std::printf("    out of order: %s (statistic=%.5g z=%.3g)\n",
                        rep.name.c_str(), rep.statistic, rep.z);
        }
    }
    if (count) *count = seen;
    return ok && seen > 0;
}

const TestReport* find_report(const ExperimentResult& r, const std::string& needle) {
    for (const auto& rep : r.reports)
        if (rep.name.find(needle) != std::string::npos) return &rep;
    return nullptr;
}

void verdict(int criterion, const char* label, bool ok) {
    std::printf("[criterion %2d] %s — %s\n", criterion, ok ? "PASS" : "FAIL", label);
    std::fflush(stdout);
}

ExperimentConfig base_config(const std::string& name, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.experiment = name;
    cfg.seed = seed;
    cfg.workers = 0;  // hardware
    return cfg;
}

}  // namespace

TEST_CASE("criterion 1 and 11a: Brownian-bridge enlargement with density checks") {
    ExperimentConfig cfg = base_config("bridge-brownian", 7);
    cfg.n_paths = 200000;
    cfg.n_steps = 512;
    cfg.workers = 1;  // the runtime bound is per laptop core
    const Timed timed = run_timed(cfg);
    const ExperimentResult& r = timed.result;

    const bool mart_ok = prefixed_ok(r, "bb:mart");
    const TestReport* ctrl = find_report(r, "bb:negctrl uncompensated");
    const TestReport* value = find_report(r, "bb:negctrl statistic equals");
    const bool ctrl_ok = ctrl && !ctrl->pass && std::abs(ctrl->z) > 4.0;
    const bool value_ok = value && value->pass;
    const bool runtime_ok = timed.seconds <= 60.0;
    CHECK(mart_ok);
    CHECK(ctrl_ok);
    CHECK(value_ok);
    CHECK(runtime_ok);
    verdict(1, "Brownian-bridge martingale tests + negative control + runtime",
            mart_ok && ctrl_ok && value_ok && runtime_ok);
    std::printf("    runtime: %.1f s (single worker)\n", timed.seconds);

    const bool q_mart_ok = prefixed_ok(r, "bb:q[");
    const TestReport* norm = find_report(r, "bb:q normalizes");
    const bool q_norm_ok = norm && norm->pass;
    CHECK(q_mart_ok);
    CHECK(q_norm_ok);
    verdict(11, "bb_density_q martingale + normalization (part a)",
            q_mart_ok && q_norm_ok);
}

TEST_CASE("criterion 2 and 11b: Poisson-bridge enlargement with density checks") {
    ExperimentConfig cfg = base_config("bridge-poisson", 11);
    cfg.n_paths = 200000;
    cfg.n_steps = 512;
    cfg.rate = 1.0;
    const ExperimentResult r = run_timed(cfg).result;

    const bool mart_ok = prefixed_ok(r, "pb:mart");
    const TestReport* ctrl = find_report(r, "pb:negctrl uncompensated");
    const TestReport* value = find_report(r, "pb:negctrl statistic equals");
    const bool ctrl_ok = ctrl && !ctrl->pass;
    const bool value_ok = value && value->pass;
    CHECK(mart_ok);
    CHECK(ctrl_ok);
    CHECK(value_ok);
    verdict(2, "Poisson-bridge compensated count + negative control",
            mart_ok && ctrl_ok && value_ok);

    const bool q_mart_ok = prefixed_ok(r, "pb:q[");
    const TestReport* norm = find_report(r, "pb:q sums to 1");
    const bool q_norm_ok = norm && norm->pass;
    CHECK(q_mart_ok);
    CHECK(q_norm_ok);
    verdict(11, "poisson_density_q martingale + normalization (part b)",
            q_mart_ok && q_norm_ok);
}

TEST_CASE("criterion 3: n-th jump compensator") {
    ExperimentConfig cfg = base_config("nth-jump", 13);
    cfg.n_paths = 200000;
    cfg.n_steps = 512;
    cfg.rate = 2.0;
    cfg.jump_index = 3;
    cfg.horizon = 2.0;
    const ExperimentResult r = run_timed(cfg).result;

    const bool mart_ok = prefixed_ok(r, "nj:mart");
    const TestReport* ctrl = find_report(r, "nj:negctrl");
    const bool ctrl_ok = ctrl && !ctrl->pass;
    const TestReport* mean = find_report(r, "nj:T_n mean");
    const bool mean_ok = mean && mean->pass;
    CHECK(mart_ok);
    CHECK(ctrl_ok);
    CHECK(mean_ok);
    verdict(3, "four-term decomposition passes; dropping the jump term fails",
            mart_ok && ctrl_ok && mean_ok);
}

TEST_CASE("criterion 4: hitting-time enlargement") {
    ExperimentConfig cfg = base_config("hitting-time", 17);
    cfg.n_paths = 100000;
    cfg.n_steps = 512;  // the conditioned paths run on 8x512 = 4096 steps
    const ExperimentResult r = run_timed(cfg).result;

    const TestReport* ks = find_report(r, "ht:sampler KS");
    const TestReport* pin = find_report(r, "ht:pinning");
    const TestReport* off = find_report(r, "ht:fraction ending off");
    const TestReport* crossed = find_report(r, "ht:fraction crossing");
    const bool ok = ks && ks->pass && pin && pin->pass && off && off->pass &&
                    crossed && crossed->pass;
    CHECK(ok);
    verdict(4, "exact tau sampler KS + conditioned-path pinning", ok);
}

TEST_CASE("criterion 5: noisy-terminal-signal decomposition") {
    ExperimentConfig cfg = base_config("noisy-signal", 19);
    cfg.n_paths = 200000;
    cfg.n_steps = 512;
    const ExperimentResult r = run_timed(cfg).result;

    std::size_t cov_count = 0;
    const bool cov_ok = prefixed_ok(r, "ns:innovation", &cov_count);
    const bool cross_ok = prefixed_ok(r, "ns:cross");
    CHECK(cov_ok);
    CHECK(cov_count == 6);  // 3x3 grid of (s,t) pairs up to symmetry
    CHECK(cross_ok);
    verdict(5, "innovation covariance + correlated-signal closed form",
            cov_ok && cross_ok && cov_count == 6);
}

TEST_CASE("criterion 6: progressive variance-schedule bridge") {
    ExperimentConfig cfg = base_config("prog-bridge", 23);
    cfg.n_paths = 200000;
    cfg.n_steps = 512;  // pinning runs on 4096 and 16384 geometric steps
    const ExperimentResult r = run_timed(cfg).result;

    const bool ok = prefixed_ok(r, "prog:");
    CHECK(ok);
    verdict(6, "variance-gap, covariance, E[BV]=t, pinning + refinement", ok);
}

TEST_CASE("criterion 7: characteristic-function identity") {
    ExperimentConfig cfg = base_config("cf-identity", 29);
    cfg.n_paths = 200000;
    cfg.n_steps = 512;
    cfg.thetas = {0.5, 1.0};
    const ExperimentResult r = run_timed(cfg).result;

    std::size_t count = 0;
    const bool ok = prefixed_ok(r, "cf:", &count);
    CHECK(ok);
    CHECK(count == 16);  // 2 models x 2 thetas x 2 h x (re, im)
    verdict(7, "Levy CF identity for Brownian and Poisson models", ok && count == 16);
}

TEST_CASE("criterion 8: structural default") {
    ExperimentConfig cfg = base_config("structural-default", 31);
    cfg.n_paths = 100000;
    cfg.n_steps = 1024;  // refinements run at 4096 and 16384
    const ExperimentResult r = run_timed(cfg).result;

    const bool ok = prefixed_ok(r, "sd:");
    CHECK(ok);
    CHECK(r.curves.count("sd_survival") == 1);
    verdict(8, "default probability within CLT+discretization band, bias shrinks", ok);
}

TEST_CASE("criterion 9: Kyle-Back equilibrium (g4-consistent)") {
    ExperimentConfig cfg = base_config("kyle-back", 37);
    cfg.n_paths = 100000;
    cfg.n_steps = 512;  // bridge integration on 4096 steps
    cfg.drift_variant = "g4-consistent";
    const ExperimentResult r = run_timed(cfg).result;

    const bool ok = prefixed_ok(r, "kb:");
    CHECK(ok);
    verdict(9, "covariance min(s,t) + hitting-law KS + pre-default pinning", ok);
}

TEST_CASE("criterion 10: determinism across runs and worker counts") {
    ExperimentConfig cfg = base_config("suite", 41);
    cfg.n_paths = 2000;  // bit-identity is budget-independent
    cfg.n_steps = 64;

    cfg.workers = 1;
    const ExperimentResult first = run_experiment(cfg);
    const ExperimentResult again = run_experiment(cfg);
    cfg.workers = 8;
    const ExperimentResult wide = run_experiment(cfg);

    const std::string csv1 = reports_to_csv(first.reports);
    const bool rerun_ok = csv1 == reports_to_csv(again.reports);
    const bool workers_ok = csv1 == reports_to_csv(wide.reports);
    bool curves_ok = first.curves.size() == wide.curves.size();
    if (curves_ok)
        for (const auto& [key, curve] : first.curves)
            curves_ok = curves_ok && wide.curves.count(key) &&
                        curve_to_csv(curve) == curve_to_csv(wide.curves.at(key));
    CHECK(rerun_ok);
    CHECK(workers_ok);
    CHECK(curves_ok);
    verdict(10, "suite reports identical across reruns and workers 1 vs 8",
            rerun_ok && workers_ok && curves_ok);
}
