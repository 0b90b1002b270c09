#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>

namespace semkge {

// Compensated (Kahan) summation. Metric aggregation feeds values in a fixed
// order through this accumulator so reports are reproducible to the last bit
// regardless of how the per-query work was parallelized.
class KahanSum {
public:
    void add(double x) {
        double y = x - comp_;
        double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }

    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow for large |x|.
inline double softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

// Shortest round-trip decimal form, for byte-stable JSON output.
inline std::string json_number(double x) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    (void)ec;
    return std::string(buf, end);
}

}  // namespace semkge
