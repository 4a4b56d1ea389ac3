#include "filtlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "filtlab/parallel.hpp"
#include "filtlab/paths.hpp"

namespace filtlab {

namespace {

double sample_median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    return v[mid];
}

// Mean and unbiased stderr of the mean, accumulated in path order.
struct MeanStats {
    double mean = 0.0;
    double stderr_ = 0.0;
};

MeanStats summarize(const std::vector<double>& values) {
    const std::size_t n = values.size();
    KahanSum sum;
    for (double v : values) sum.add(v);
    const double mean = sum.value() / static_cast<double>(n);
    KahanSum sq;
    for (double v : values) {
        const double d = v - mean;
        sq.add(d * d);
    }
    MeanStats out;
    out.mean = mean;
    out.stderr_ = n > 1 ? std::sqrt(sq.value() / (static_cast<double>(n - 1) *
                                                  static_cast<double>(n)))
                        : 0.0;
    return out;
}

double z_score(double statistic, double stderr_value) {
    if (stderr_value > 0.0) return statistic / stderr_value;
    return statistic == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

std::string pair_label(double s, double t) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "s=%g t=%g", s, t);
    return buf;
}

}  // namespace

std::vector<BoundedFunctional> default_z_family() {
    return {
        {"Z=1", [](double, double) { return 1.0; }},
        {"Z=sin(X_s)", [](double x, double) { return std::sin(x); }},
        {"Z=ind(X_s>med)", [](double x, double med) { return x > med ? 1.0 : 0.0; }},
    };
}

std::vector<BoundedFunctional> default_g_family() {
    return {
        {"g=1", [](double, double) { return 1.0; }},
        {"g=cos(L)", [](double l, double) { return std::cos(l); }},
        {"g=ind(L>med)", [](double l, double med) { return l > med ? 1.0 : 0.0; }},
    };
}

std::vector<BoundedFunctional> unit_family() {
    return {{"1", [](double, double) { return 1.0; }}};
}

std::vector<TestReport> martingale_increment_test(const PathBundle& bundle,
                                                  const CompensatorFn& compensator,
                                                  const std::string& l_aux,
                                                  const MartingaleTestOptions& options) {
    const std::size_t n = bundle.n_paths;
    if (options.pairs.empty())
        throw std::invalid_argument("martingale_increment_test: no (s,t) pairs");

    // Unique times needed from the compensator, in grid order.
    std::vector<double> times;
    for (const auto& [s, t] : options.pairs) {
        if (!(s < t))
            throw std::invalid_argument("martingale_increment_test: need s < t");
        times.push_back(s);
        times.push_back(t);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    std::vector<std::size_t> time_index(times.size());
    for (std::size_t k = 0; k < times.size(); ++k)
        time_index[k] = bundle.grid.index_of(times[k]);  // throws off-grid
    auto slot_of = [&](double t) {
        return static_cast<std::size_t>(
            std::lower_bound(times.begin(), times.end(), t) - times.begin());
    };

    // Per-path compensator values at the needed times (parallel, per-path slots).
    std::vector<double> comp(n * times.size(), 0.0);
    if (compensator) {
        parallel_for(n, options.workers, [&](std::size_t begin, std::size_t end) {
            for (std::size_t p = begin; p < end; ++p)
                for (std::size_t k = 0; k < times.size(); ++k)
                    comp[p * times.size() + k] = compensator(bundle, p, times[k]);
        });
    }

    const std::vector<double> zero_l(l_aux.empty() ? n : 0, 0.0);
    const std::vector<double>& l_values =
        l_aux.empty() ? zero_l : bundle.aux_values(l_aux);
    const double median_l = sample_median(l_values);

    std::vector<TestReport> reports;
    std::vector<double> y(n);
    for (const auto& [s, t] : options.pairs) {
        const std::size_t is = bundle.grid.index_of(s);
        const std::size_t it = bundle.grid.index_of(t);
        const std::size_t ks = slot_of(s);
        const std::size_t kt = slot_of(t);

        std::vector<double> state_s(n);
        for (std::size_t p = 0; p < n; ++p) state_s[p] = bundle.value(p, is);
        const double median_s = sample_median(state_s);

        for (const auto& zf : options.z_family) {
            for (const auto& gf : options.g_family) {
                for (std::size_t p = 0; p < n; ++p) {
                    const double dx = (bundle.value(p, it) - comp[p * times.size() + kt]) -
                                      (bundle.value(p, is) - comp[p * times.size() + ks]);
                    y[p] = zf.eval(state_s[p], median_s) *
                           gf.eval(l_values[p], median_l) * dx;
                }
                const MeanStats stats = summarize(y);
                TestReport r;
                r.name = options.name_prefix + "mart " + pair_label(s, t) + " " +
                         zf.name + " " + gf.name;
                r.statistic = stats.mean;
                r.stderr_ = stats.stderr_;
                r.z = z_score(stats.mean, stats.stderr_);
                r.threshold = options.threshold;
                r.pass = std::abs(r.z) <= options.threshold;
                r.negative_control = options.negative_control;
                r.n_paths = n;
                r.seed = bundle.seed;
                r.grid_summary = bundle.grid.summary();
                reports.push_back(std::move(r));
            }
        }
    }
    return reports;
}

std::vector<TestReport> covariance_test(const PathBundle& bundle,
                                        const std::function<double(double, double)>& target,
                                        const CovarianceTestOptions& options) {
    const std::size_t n = bundle.n_paths;
    std::vector<TestReport> reports;
    std::vector<double> prod(n);
    for (const auto& [s, t] : options.pairs) {
        const std::size_t is = bundle.grid.index_of(s);
        const std::size_t it = bundle.grid.index_of(t);
        KahanSum sum_s, sum_t;
        for (std::size_t p = 0; p < n; ++p) {
            sum_s.add(bundle.value(p, is));
            sum_t.add(bundle.value(p, it));
        }
        const double mean_s = sum_s.value() / static_cast<double>(n);
        const double mean_t = sum_t.value() / static_cast<double>(n);
        for (std::size_t p = 0; p < n; ++p)
            prod[p] = (bundle.value(p, is) - mean_s) * (bundle.value(p, it) - mean_t);
        const MeanStats stats = summarize(prod);
        const double cov = stats.mean * static_cast<double>(n) / static_cast<double>(n - 1);

        TestReport r;
        r.name = options.name_prefix + "cov " + pair_label(s, t);
        r.statistic = cov - target(s, t);
        r.stderr_ = stats.stderr_;
        r.z = z_score(r.statistic, r.stderr_);
        r.threshold = options.threshold;
        r.pass = std::abs(r.z) <= options.threshold;
        r.negative_control = options.negative_control;
        r.n_paths = n;
        r.seed = bundle.seed;
        r.grid_summary = bundle.grid.summary();
        reports.push_back(std::move(r));
    }
    return reports;
}

TestReport terminal_pinning_test(const PathBundle& bundle,
                                 const std::string& target_aux, double rms_bound,
                                 const std::string& name) {
    const std::vector<double>& target = bundle.aux_values(target_aux);
    const std::size_t n = bundle.n_paths;
    const std::size_t last = bundle.grid.size() - 1;
    std::vector<double> sq(n);
    for (std::size_t p = 0; p < n; ++p) {
        const double e = bundle.value(p, last) - target[p];
        sq[p] = e * e;
    }
    const MeanStats stats = summarize(sq);
    const double rms = std::sqrt(std::max(stats.mean, 0.0));

    TestReport r;
    r.name = name;
    r.statistic = rms;
    r.stderr_ = rms > 0.0 ? stats.stderr_ / (2.0 * rms) : 0.0;
    r.z = z_score(r.statistic, r.stderr_);
    r.threshold = rms_bound;
    r.one_sided = true;
    r.pass = rms <= rms_bound;
    r.n_paths = n;
    r.seed = bundle.seed;
    r.grid_summary = bundle.grid.summary();
    return r;
}

std::vector<TestReport> cf_identity_test(const LevyModel& model,
                                         const TimeGrid& grid, std::size_t n_paths,
                                         std::uint64_t seed,
                                         const CfIdentityOptions& options) {
    if (!(options.s < options.t) || !(options.t < grid.horizon()))
        throw std::invalid_argument("cf_identity_test: need s < t < horizon");
    const PathBundle bundle =
        simulate_levy(model, grid, n_paths, seed, options.workers);
    const double horizon = grid.horizon();
    const std::size_t is = grid.index_of(options.s);
    const std::size_t it = grid.index_of(options.t);
    const std::size_t last = grid.size() - 1;

    // Per-path trapezoid of (Z_T - Z_u)/(T - u) over [s, t], minus the raw
    // increment. The pointwise identity makes any quadrature with weights
    // summing to t - s unbiased here.
    std::vector<double> diff(n_paths), z_term(n_paths), z_s(n_paths);
    parallel_for(n_paths, options.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const double zT = bundle.value(p, last);
            double integral = 0.0;
            for (std::size_t i = is; i < it; ++i) {
                const double f0 = (zT - bundle.value(p, i)) / (horizon - grid[i]);
                const double f1 = (zT - bundle.value(p, i + 1)) / (horizon - grid[i + 1]);
                integral += 0.5 * grid.step(i) * (f0 + f1);
            }
            diff[p] = integral - (bundle.value(p, it) - bundle.value(p, is));
            z_term[p] = zT;
            z_s[p] = bundle.value(p, is);
        }
    });

    std::vector<TestReport> reports;
    std::vector<double> re(n_paths), im(n_paths);
    for (double theta : options.thetas) {
        for (const auto& h : options.h_family) {
            for (std::size_t p = 0; p < n_paths; ++p) {
                const double hval = h.eval(z_s[p]);
                const double a = theta * z_term[p];
                re[p] = std::cos(a) * hval * diff[p];
                im[p] = std::sin(a) * hval * diff[p];
            }
            const MeanStats sre = summarize(re);
            const MeanStats sim_ = summarize(im);
            char label[96];
            std::snprintf(label, sizeof(label), "cf theta=%g h=%s", theta,
                          h.name.c_str());
            for (int part = 0; part < 2; ++part) {
                const MeanStats& st = part == 0 ? sre : sim_;
                TestReport r;
                r.name = options.name_prefix + label + (part == 0 ? " re" : " im");
                r.statistic = st.mean;
                r.stderr_ = st.stderr_;
                r.z = z_score(st.mean, st.stderr_);
                r.threshold = options.threshold;
                r.pass = std::abs(r.z) <= options.threshold;
                r.n_paths = n_paths;
                r.seed = seed;
                r.grid_summary = grid.summary();
                reports.push_back(std::move(r));
            }
        }
    }
    return reports;
}

double ks_critical_value(std::size_t n, double level) {
    if (n == 0) throw std::invalid_argument("ks_critical_value: empty sample");
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("ks_critical_value: level must lie in (0,1)");
    const double c = std::sqrt(-0.5 * std::log(level / 2.0));
    return c / std::sqrt(static_cast<double>(n));
}

TestReport ks_test(std::vector<double> samples,
                   const std::function<double(double)>& target_cdf, double level,
                   const std::string& name, bool negative_control) {
    if (samples.empty()) throw std::invalid_argument("ks_test: empty sample");
    std::sort(samples.begin(), samples.end());
    const std::size_t n = samples.size();
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = target_cdf(samples[i]);
        const double lo = f - static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - f;
        d = std::max(d, std::max(lo, hi));
    }
    TestReport r;
    r.name = name;
    r.statistic = d;
    r.threshold = ks_critical_value(n, level);
    r.one_sided = true;
    r.pass = d <= r.threshold;
    r.negative_control = negative_control;
    r.n_paths = n;
    return r;
}

TestReport mean_value_test(const std::vector<double>& values, double target,
                           double threshold, const std::string& name) {
    const MeanStats stats = summarize(values);
    TestReport r;
    r.name = name;
    r.statistic = stats.mean - target;
    r.stderr_ = stats.stderr_;
    r.z = z_score(r.statistic, r.stderr_);
    r.threshold = threshold;
    r.pass = std::abs(r.z) <= threshold;
    r.n_paths = values.size();
    return r;
}

}  // namespace filtlab
