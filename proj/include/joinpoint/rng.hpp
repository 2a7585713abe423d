#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "joinpoint/errors.hpp"

namespace joinpoint {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed-splitting rule used everywhere a run needs independent streams:
// two rounds of splitmix64 mixing in the (a, b) indices. Chains use
// (chain, 0); study replicates use (scenario_index, replicate_index).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = splitmix64(master ^ splitmix64(a + 0x632be59bd9b4e019ULL));
    return splitmix64(s ^ splitmix64(b + 0x9e6c63d0876a9a47ULL));
}

// Random draws built on mt19937_64 raw output only. The standard library's
// distribution objects are implementation-defined, so all transforms live
// here; a stored seed reproduces every stream bit for bit.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        // Box-Muller, cosine branch only.
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    // Gamma(shape, scale 1) by Marsaglia-Tsang squeeze; shape < 1 via boost.
    double gamma(double shape) {
        if (!(shape > 0.0)) throw NonPositive("gamma shape must be positive");
        if (shape < 1.0) {
            double u = uniform();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / (3.0 * std::sqrt(d));
        for (;;) {
            double x = normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Inverse-gamma with density scale^shape / Gamma(shape) x^-(shape+1) e^(-scale/x).
    double inverse_gamma(double shape, double scale) {
        if (!(scale > 0.0)) throw NonPositive("inverse-gamma scale must be positive");
        return scale / gamma(shape);
    }

    // Exact Poisson sampling; Knuth's product method with additive splitting
    // so the running product never underflows for large means.
    long poisson(double mean) {
        if (mean < 0.0) throw NonPositive("poisson mean must be nonnegative");
        long total = 0;
        while (mean > 60.0) {
            total += poisson_knuth(30.0);
            mean -= 30.0;
        }
        return total + poisson_knuth(mean);
    }

private:
    long poisson_knuth(double mean) {
        const double limit = std::exp(-mean);
        long k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    static constexpr double kPi = 3.141592653589793238462643383279502884;

    std::mt19937_64 eng_;
};

}  // namespace joinpoint
