#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

namespace filtlab {

// Runs body(begin, end) over disjoint contiguous chunks of [0, n) on
// `workers` threads (0 = hardware concurrency). Callers must write only to
// per-index slots so the result is identical for any worker count.
void parallel_for(std::size_t n, unsigned workers,
                  const std::function<void(std::size_t, std::size_t)>& body);

unsigned resolve_workers(unsigned workers);

// Neumaier-compensated accumulator; used for the big fixed-order reductions
// so that results do not depend on how paths were scheduled.
class KahanSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace filtlab
