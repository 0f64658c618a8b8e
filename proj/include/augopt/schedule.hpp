#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>

#include "augopt/errors.hpp"

namespace augopt {

/// value(t) = coefficient * (t + offset)^(-exponent). Positive and
/// nonincreasing for all t >= 0; offset >= 1 keeps t = 0 regular.
struct PowerLaw {
    double coefficient = 1.0;
    double exponent = 0.0;
    long offset = 1;

    PowerLaw() = default;
    PowerLaw(double coefficient, double exponent, long offset = 1)
        : coefficient(coefficient), exponent(exponent), offset(offset) {
        if (!(coefficient > 0.0)) throw InvalidParameter("power law: coefficient must be > 0");
        if (!(exponent >= 0.0)) throw InvalidParameter("power law: exponent must be >= 0");
        if (offset < 1) throw InvalidParameter("power law: offset must be >= 1");
    }

    double value(long t) const {
        if (exponent == 0.0) return coefficient;
        return coefficient * std::pow(static_cast<double>(t + offset), -exponent);
    }
};

struct BatchRule {
    enum class Kind { Constant, Power };
    Kind kind = Kind::Constant;
    long size = 1;
    PowerLaw law;

    static BatchRule constant(long size) {
        if (size < 1) throw InvalidParameter("batch size must be >= 1");
        BatchRule r;
        r.kind = Kind::Constant;
        r.size = size;
        return r;
    }

    static BatchRule power(const PowerLaw& law) {
        BatchRule r;
        r.kind = Kind::Power;
        r.law = law;
        return r;
    }

    /// Batch size at step t, clamped to [1, N].
    long value(long t, long n_samples) const {
        long b = kind == Kind::Constant ? size : std::lround(law.value(t));
        return std::clamp(b, 1L, n_samples);
    }
};

struct ScheduleSample {
    double eta = 0.0;
    double sigma2 = 0.0;
    long batch = 0;
};

/// Joint time-indexed hyperparameters: learning rate, noise level, batch
/// size. sigma2 absent means identically zero.
struct ScheduleSet {
    PowerLaw eta;
    std::optional<PowerLaw> sigma2;
    std::optional<BatchRule> batch;

    double eta_value(long t) const { return eta.value(t); }
    double sigma2_value(long t) const { return sigma2 ? sigma2->value(t) : 0.0; }
    long batch_value(long t, long n_samples) const {
        return batch ? batch->value(t, n_samples) : n_samples;
    }

    ScheduleSample eval(long t, long n_samples) const {
        if (t < 0) throw InvalidParameter("schedule eval: t must be >= 0");
        return {eta_value(t), sigma2_value(t), batch_value(t, n_samples)};
    }
};

/// Intrinsic time tau(t) = sum_{s<t} (2 eta_s / N) lambda_s, where lambda_s is
/// the restricted smallest eigenvalue of the expected augmented gram at step s.
inline double intrinsic_time(const ScheduleSet& s, const std::function<double(long)>& lambda_at,
                             long n_samples, long t) {
    double sum = 0.0, comp = 0.0;
    for (long step = 0; step < t; ++step) {
        const double lam = lambda_at(step);
        if (lam < 0.0) throw InvalidParameter("intrinsic_time: negative eigenvalue sequence");
        const double term = 2.0 * s.eta_value(step) / static_cast<double>(n_samples) * lam;
        const double y = term - comp;
        const double next = sum + y;
        comp = (next - sum) - y;
        sum = next;
    }
    return sum;
}

inline double partial_sum(const std::function<double(long)>& series, long t_max) {
    double sum = 0.0, comp = 0.0;
    for (long t = 0; t < t_max; ++t) {
        const double y = series(t) - comp;
        const double next = sum + y;
        comp = (next - sum) - y;
        sum = next;
    }
    return sum;
}

/// Least-squares slope of log(block sum) against log(block start) over dyadic
/// blocks ending at t_max. For terms ~ t^(-a) the slope estimates 1 - a, so a
/// positive value signals a divergent series and a negative value a
/// convergent one. This is a heuristic for arbitrary series; power-law
/// schedules should be decided symbolically.
inline double growth_exponent(const std::function<double(long)>& series, long t_max) {
    constexpr int kBlocks = 8;
    if (t_max < (1L << (kBlocks + 1))) throw InvalidParameter("growth_exponent: horizon too short");
    long edges[kBlocks + 1];
    for (int j = 0; j <= kBlocks; ++j) edges[j] = t_max >> (kBlocks - j);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int j = 0; j < kBlocks; ++j) {
        double block = 0.0;
        for (long t = edges[j]; t < edges[j + 1]; ++t) block += series(t);
        if (!(block > 0.0)) return -std::numeric_limits<double>::infinity();
        const double lx = std::log(0.5 * static_cast<double>(edges[j] + edges[j + 1]));
        const double ly = std::log(block);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++m;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace augopt
